#include "switchq/benchmark_tables.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <ostream>

#include "switchq/lattice.hpp"
#include "switchq/marginal_quantization.hpp"
#include "switchq/marginal_solver.hpp"
#include "switchq/markovian_solver.hpp"

namespace switchq {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t auto_samples(int n_quant) {
    return std::max<std::size_t>(1u << 19, static_cast<std::size_t>(n_quant) * 256);
}

}  // namespace

std::vector<Table1Row> run_table1(const GBMSwitchParams& params,
                                  const ClosedFormSolution& solution,
                                  const std::vector<Table1Case>& cases, double r_mult,
                                  std::uint64_t seed, std::size_t quant_samples) {
    const SwitchingModel model = build_finite_horizon_model(params, solution);
    const double exact = solution.v2(params.x0);
    const Vec x0 = Vec::Constant(1, params.x0);

    std::map<int, GaussianQuantizer> quantizers;
    std::vector<Table1Row> rows;
    rows.reserve(cases.size());
    for (const Table1Case& c : cases) {
        const auto t0 = std::chrono::steady_clock::now();
        auto it = quantizers.find(c.n_quant);
        if (it == quantizers.end()) {
            const std::size_t ns = quant_samples ? quant_samples : auto_samples(c.n_quant);
            it = quantizers
                     .emplace(c.n_quant,
                              build_gaussian_quantizer(1, c.n_quant, QuantMethod::lloyd_mc,
                                                       ns, 200, seed))
                     .first;
        }
        const LatticeGrid grid =
            LatticeGrid::build(1, 1.0 / c.delta_inv, r_mult * params.x0);
        const TimeGrid tg = TimeGrid::make(params.horizon, c.m);
        const ValueSurface surf = solve_markovian(model, grid, tg, it->second);
        const double value = value_at(surf, grid, 0, x0, 1);

        Table1Row row;
        row.params = c;
        row.value = value;
        row.exact = exact;
        row.rel_error_pct = 100.0 * std::abs(value - exact) / std::abs(exact);
        row.seconds = seconds_since(t0);
        rows.push_back(row);
    }
    return rows;
}

std::vector<Table2Row> run_table2(const GBMSwitchParams& params,
                                  const ClosedFormSolution& solution,
                                  const std::vector<Table2Case>& cases,
                                  std::size_t n_train, std::size_t n_mc,
                                  const std::vector<std::uint64_t>& seeds) {
    const SwitchingModel model = build_finite_horizon_model(params, solution);
    const double exact = solution.v2(params.x0);
    const Vec x0 = Vec::Constant(1, params.x0);

    std::vector<Table2Row> rows;
    rows.reserve(cases.size() * seeds.size());
    for (const Table2Case& c : cases) {
        for (std::uint64_t seed : seeds) {
            const auto t0 = std::chrono::steady_clock::now();
            const TimeGrid tg = TimeGrid::make(params.horizon, c.m);
            const std::vector<int> sizes = allocate_grid_sizes(tg, 1, c.nbar);
            std::vector<PointMat> grids =
                train_marginal_grids(model, x0, tg, sizes, n_train, 100, seed);
            const MarginalQuantization mq =
                estimate_transitions(model, x0, tg, std::move(grids), n_mc, seed);
            const QuantizedValueProcess qv = tree_solve(model, mq);
            const double value = qv.y0[1];

            Table2Row row;
            row.params = c;
            row.seed = seed;
            row.value = value;
            row.exact = exact;
            row.rel_error_pct = 100.0 * std::abs(value - exact) / std::abs(exact);
            row.seconds = seconds_since(t0);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_table1_csv(const std::vector<Table1Row>& rows, std::ostream& os) {
    os << "m,delta_inv,n_quant,value,rel_error_pct,seconds\n";
    char buf[160];
    for (const Table1Row& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%d,%.17g,%.17g,%.3f\n", r.params.m,
                      r.params.delta_inv, r.params.n_quant, r.value, r.rel_error_pct,
                      r.seconds);
        os << buf;
    }
}

void write_table2_csv(const std::vector<Table2Row>& rows, std::ostream& os) {
    os << "m,nbar,seed,value,rel_error_pct,seconds\n";
    char buf[160];
    for (const Table2Row& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%llu,%.17g,%.17g,%.3f\n", r.params.m,
                      r.params.nbar, static_cast<unsigned long long>(r.seed), r.value,
                      r.rel_error_pct, r.seconds);
        os << buf;
    }
}

std::vector<Table1Case> default_table1_cases() {
    return {{10, 10, 10},    {10, 10, 100},   {10, 10, 1000},  {10, 100, 1000},
            {10, 100, 5000}, {100, 10, 100},  {100, 10, 1000}, {100, 10, 5000},
            {100, 100, 100}, {100, 100, 1000}};
}

std::vector<Table2Case> default_table2_cases() {
    return {{10, 100}, {10, 1000}, {10, 10000}, {100, 1000}, {100, 10000}, {100, 50000}};
}

}  // namespace switchq
