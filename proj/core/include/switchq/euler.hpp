#pragma once

#include <cstdint>
#include <iosfwd>

#include "switchq/model.hpp"

namespace switchq {

// n_paths Euler paths of the uncontrolled chain, row-major [path][step][coord].
struct PathBundle {
    int d = 1;
    int m = 1;
    double h = 1.0;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    std::vector<double> data;

    double coord(std::size_t path, int k, int c) const {
        return data[(path * static_cast<std::size_t>(m + 1) + static_cast<std::size_t>(k)) *
                        static_cast<std::size_t>(d) +
                    static_cast<std::size_t>(c)];
    }
    Vec state(std::size_t path, int k) const {
        Vec x(d);
        for (int c = 0; c < d; ++c) x[c] = coord(path, k, c);
        return x;
    }
};

// One transition of the Euler chain: x + b_i(x) h + sigma_i(x) sqrt(h) shock.
Vec euler_step(const SwitchingModel& model, const Vec& x, int regime, double h,
               const Vec& shock);

// True when drift and diffusion agree across regimes at a few probe points
// derived from `probe`. The marginal scheme requires this.
bool has_regime_independent_dynamics(const SwitchingModel& model, const Vec& probe);

// Simulates n_paths independent Euler paths of the uncontrolled chain with
// i.i.d. N(0, I_d) shocks, one stream per path. Deterministic given the seed
// and independent of the worker count. Throws if the coefficients differ
// across regimes at the probe points.
PathBundle simulate_uncontrolled(const SwitchingModel& model, const Vec& x0,
                                 const TimeGrid& grid, std::size_t n_paths,
                                 std::uint64_t seed);

// Debug dump, columns: path_id, k, x_1..x_d.
void write_paths_csv(const PathBundle& bundle, std::ostream& os);

}  // namespace switchq
