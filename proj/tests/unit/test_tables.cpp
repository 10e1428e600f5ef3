#include <doctest.h>

#include <cmath>
#include <sstream>

#include "switchq/benchmark_tables.hpp"

using namespace switchq;

TEST_CASE("table rows: error column is |value - exact| / exact by construction") {
    GBMSwitchParams params;
    const auto sol = solve_closed_form(params);
    const auto rows = run_table1(params, sol, {{10, 10.0, 10}}, 10.0, 1);
    REQUIRE(rows.size() == 1);
    const auto& r = rows[0];
    CHECK(r.exact == doctest::Approx(sol.v2(3.0)).epsilon(1e-15));
    CHECK(r.rel_error_pct ==
          doctest::Approx(100.0 * std::abs(r.value - r.exact) / r.exact).epsilon(1e-12));
    CHECK(r.seconds >= 0.0);
}

TEST_CASE("table CSV writers mirror the report columns") {
    GBMSwitchParams params;
    const auto sol = solve_closed_form(params);
    const auto rows1 = run_table1(params, sol, {{10, 10.0, 10}}, 10.0, 1);
    std::ostringstream os1;
    write_table1_csv(rows1, os1);
    CHECK(os1.str().rfind("m,delta_inv,n_quant,value,rel_error_pct,seconds", 0) == 0);

    const auto rows2 = run_table2(params, sol, {{4, 16}}, 20'000, 20'000, {5});
    std::ostringstream os2;
    write_table2_csv(rows2, os2);
    CHECK(os2.str().rfind("m,nbar,seed,value,rel_error_pct,seconds", 0) == 0);
    REQUIRE(rows2.size() == 1);
    CHECK(rows2[0].params.nbar == 16);
    CHECK(rows2[0].seed == 5);
}

TEST_CASE("default sweeps cover the reported parameter tuples") {
    const auto t1 = default_table1_cases();
    CHECK(t1.size() == 10);
    CHECK(t1.back().m == 100);
    CHECK(t1.back().delta_inv == 100.0);
    CHECK(t1.back().n_quant == 1000);
    const auto t2 = default_table2_cases();
    CHECK(t2.size() == 6);
}
