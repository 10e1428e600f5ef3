#pragma once

#include <cstdint>
#include <iosfwd>

#include "switchq/gaussian_quantizer.hpp"
#include "switchq/lattice.hpp"
#include "switchq/model.hpp"

namespace switchq {

// Value surface of the lattice scheme: v[k][node][i] for k = 0..m plus the
// maximizing switch target per (k < m, node, i).
struct ValueSurface {
    int m = 0;
    int q = 1;
    std::size_t n_nodes = 0;
    double h = 0.0;
    double horizon = 0.0;
    std::vector<double> values;        // (m+1) * n_nodes * q
    std::vector<std::int32_t> policy;  // m * n_nodes * q

    double value(int k, std::size_t node, int i) const {
        return values[(static_cast<std::size_t>(k) * n_nodes + node) * q + i];
    }
    int policy_at(int k, std::size_t node, int i) const {
        return policy[(static_cast<std::size_t>(k) * n_nodes + node) * q + i];
    }
};

// Backward induction on the lattice: the one-step Euler map is driven by the
// quantized Gaussian and projected back onto the grid,
//   v[k](x, i) = max_j { sum_l pi_l v[k+1](proj(F_j(x, w_l)), j)
//                        + f_j(t_k, x) h - c_ij(x) },
// with v[m] = g. Ties in the max go to the smallest regime index. Running
// profits are evaluated at the grid time t_k. Non-finite coefficient or value
// evaluations abort with a diagnostic naming (k, node, j, l).
//
// Time-independent coefficients (b, sigma, c) are cached per node when the
// cache fits in coef_cache_budget doubles, otherwise re-evaluated per step.
ValueSurface solve_markovian(const SwitchingModel& model, const LatticeGrid& grid,
                             const TimeGrid& tg, const GaussianQuantizer& gq,
                             std::size_t coef_cache_budget = 300'000'000);

// Nearest-node lookup (no interpolation). Throws std::out_of_range for k or
// regime outside the surface.
double value_at(const ValueSurface& surface, const LatticeGrid& grid, int k,
                const Vec& x, int regime);

enum class PolicySimulation {
    // Mirrors the solved chain: quantized shocks, states projected onto the
    // lattice. With q = 1 the Monte-Carlo mean estimates exactly the solved
    // value at proj(x0).
    quantized_chain,
    // Feasible-strategy estimate on the raw Euler chain with exact Gaussian
    // shocks; only the policy lookup projects onto the lattice.
    euler_chain,
};

// Simulates the controlled chain following the stored argmax policy and
// returns the Monte-Carlo average of sum f h + g - sum costs.
double evaluate_policy(const SwitchingModel& model, const ValueSurface& surface,
                       const LatticeGrid& grid, const GaussianQuantizer& gq,
                       const Vec& x0, int regime0, std::size_t n_paths,
                       std::uint64_t seed, PolicySimulation mode);

// Columns: k, t_k, x_1..x_d, regime, value, policy (policy = regime at k = m).
void write_surface_csv(const ValueSurface& surface, const LatticeGrid& grid,
                       std::ostream& os);

}  // namespace switchq
