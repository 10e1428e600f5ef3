#include <doctest.h>

#include <cmath>

#include "support/test_models.hpp"
#include "switchq/model.hpp"

using namespace switchq;

namespace {

SwitchingModel constant_cost_model(int q, std::vector<std::vector<double>> cost,
                                   std::vector<double> gains = {}) {
    SwitchingModel m;
    m.d = 1;
    m.q = q;
    m.drift = [](const Vec&, int) { return Vec::Zero(1); };
    m.diffusion = [](const Vec&, int) { return Mat::Identity(1, 1); };
    m.running_profit = [](double, const Vec&, int) { return 0.0; };
    if (gains.empty()) gains.assign(q, 0.0);
    m.terminal_gain = [gains](const Vec&, int i) { return gains[i]; };
    m.switch_cost = [cost](const Vec&, int i, int j) { return cost[i][j]; };
    return m;
}

}  // namespace

TEST_CASE("time grid invariants") {
    const TimeGrid tg = TimeGrid::make(1.0, 100);
    CHECK(tg.h == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(std::abs(tg.t(tg.m) - 1.0) < 1e-12);
    CHECK_THROWS_AS(TimeGrid::make(3.0, 2), std::invalid_argument);  // h > 1
    CHECK_THROWS_AS(TimeGrid::make(1.0, 0), std::invalid_argument);
}

TEST_CASE("validate_costs: two-regime constant costs pass with margin 0.5") {
    const auto m = constant_cost_model(2, {{0.0, 0.5}, {0.5, 0.0}});
    const auto report = validate_costs(m, testmodels::linspace_points(-5, 5, 11));
    CHECK(report.passed);
    CHECK(report.min_cost == doctest::Approx(0.5));
    CHECK(report.min_triangle == doctest::Approx(1.0));  // c12 + c21 - c11
}

TEST_CASE("validate_costs: single regime passes vacuously") {
    const auto m = constant_cost_model(1, {{0.0}});
    const auto report = validate_costs(m, testmodels::linspace_points(-1, 1, 3));
    CHECK(report.passed);
    CHECK(std::isinf(report.min_cost));
}

TEST_CASE("validate_costs: triangular violation reported with margin -1") {
    // c12 = c23 = 1 but c13 = 3 makes the double switch cheaper.
    std::vector<std::vector<double>> cost = {
        {0.0, 1.0, 3.0}, {1.0, 0.0, 1.0}, {1.0, 1.0, 0.0}};
    const auto m = constant_cost_model(3, cost);
    const auto report = validate_costs(m, testmodels::linspace_points(0, 1, 2));
    CHECK_FALSE(report.passed);
    CHECK(report.min_triangle == doctest::Approx(-1.0));
    bool found = false;
    for (const auto& issue : report.issues)
        if (issue.condition == "triangular" && issue.i == 0 && issue.j == 1 && issue.k == 2)
            found = true;
    CHECK(found);
}

TEST_CASE("validate_costs: nonpositive off-diagonal cost fails") {
    const auto m = constant_cost_model(2, {{0.0, 0.0}, {0.5, 0.0}});
    const auto report = validate_costs(m, testmodels::linspace_points(0, 1, 2));
    CHECK_FALSE(report.passed);
}

TEST_CASE("validate_terminal: zero gains with positive costs pass") {
    const auto m = constant_cost_model(2, {{0.0, 0.5}, {0.5, 0.0}});
    const auto report = validate_terminal(m, testmodels::linspace_points(-2, 2, 9));
    CHECK(report.passed);
    CHECK(report.worst_margin == doctest::Approx(0.5));
}

TEST_CASE("validate_terminal: profitable final switch fails with margin -0.5") {
    const auto m = constant_cost_model(2, {{0.0, 0.5}, {0.5, 0.0}}, {0.0, 1.0});
    const auto report = validate_terminal(m, testmodels::linspace_points(0, 1, 2));
    CHECK_FALSE(report.passed);
    CHECK(report.worst_margin == doctest::Approx(-0.5));
    REQUIRE(!report.issues.empty());
    CHECK(report.issues[0].i == 0);
    CHECK(report.issues[0].j == 1);
}

TEST_CASE("validation margins shrink when the sample grows") {
    // State-dependent costs: c_ij(x) = 1 + 0.5 sin(x).
    SwitchingModel m = constant_cost_model(2, {{0.0, 1.0}, {1.0, 0.0}});
    m.switch_cost = [](const Vec& x, int i, int j) {
        return i == j ? 0.0 : 1.0 + 0.5 * std::sin(x[0]);
    };
    const auto small = testmodels::linspace_points(0, 1, 5);
    auto large = small;
    for (const auto& x : testmodels::linspace_points(-8, 8, 57)) large.push_back(x);
    const auto r_small = validate_costs(m, small);
    const auto r_large = validate_costs(m, large);
    CHECK(r_large.min_cost <= r_small.min_cost + 1e-15);
    CHECK(r_large.min_triangle <= r_small.min_triangle + 1e-15);
}

TEST_CASE("constant costs: validation outcome independent of the sample") {
    const auto m = constant_cost_model(2, {{0.0, 0.5}, {0.5, 0.0}});
    const auto r1 = validate_costs(m, testmodels::linspace_points(-1, 1, 3));
    const auto r2 = validate_costs(m, testmodels::linspace_points(-100, 100, 41));
    CHECK(r1.passed == r2.passed);
    CHECK(r1.min_cost == doctest::Approx(r2.min_cost).epsilon(1e-15));
    CHECK(r1.min_triangle == doctest::Approx(r2.min_triangle).epsilon(1e-15));
}

TEST_CASE("empty sample set is rejected") {
    const auto m = constant_cost_model(2, {{0.0, 0.5}, {0.5, 0.0}});
    CHECK_THROWS_AS(validate_costs(m, {}), std::invalid_argument);
    CHECK_THROWS_AS(validate_terminal(m, {}), std::invalid_argument);
}
