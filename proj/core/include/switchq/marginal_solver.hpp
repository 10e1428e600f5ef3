#pragma once

#include <iosfwd>

#include "switchq/marginal_quantization.hpp"
#include "switchq/model.hpp"

namespace switchq {

// Values of the quantization tree: one vector per grid point and regime at
// every step, plus the switch policy and the initial values y0 per regime.
struct QuantizedValueProcess {
    int m = 0;
    int q = 1;
    std::vector<Mat> values;              // k = 0..m, N_k x q
    std::vector<Eigen::MatrixXi> policy;  // k = 0..m-1, N_k x q
    Vec y0;                               // values at the root, per regime
};

// Backward pass over the quantization tree:
//   v_m^i = g_i on Gamma_m,
//   v_k^i(x_k^l) = max_j { sum_l' pi_k[l][l'] v_{k+1}^j(x_{k+1}^l')
//                          + h f_j(t_k, x_k^l) - c_ij(x_k^l) }.
// Ties in the max go to the smallest regime index.
QuantizedValueProcess tree_solve(const SwitchingModel& model,
                                 const MarginalQuantization& mq);

// Columns: k, t_k, l, x_1..x_d, regime, value, policy, flagged.
void write_tree_csv(const QuantizedValueProcess& qv, const MarginalQuantization& mq,
                    std::ostream& os);

}  // namespace switchq
