#pragma once

#include <Eigen/Core>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace switchq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
// Point lists (N points x d coords) are stored row-major so a row is a
// contiguous coordinate array.
using PointMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Finite-horizon multiple switching problem on a regime-dependent diffusion
//   dX = b(X, i) dt + sigma(X, i) dW,   i in {0, ..., q-1},
// with running profit f_i(t, x), terminal gain g_i(x) and switching costs
// c_ij(x). Regimes are 0-based throughout the library.
//
// Coefficient callbacks must be pure and reentrant: solvers evaluate them
// concurrently from many workers. A model is treated as immutable once built.
struct SwitchingModel {
    int d = 1;  // state dimension
    int q = 1;  // number of regimes

    std::function<Vec(const Vec&, int)> drift;                      // b_i(x)
    std::function<Mat(const Vec&, int)> diffusion;                  // sigma_i(x), d x d
    std::function<double(double, const Vec&, int)> running_profit;  // f_i(t, x)
    std::function<double(const Vec&, int)> terminal_gain;           // g_i(x)
    std::function<double(const Vec&, int, int)> switch_cost;        // c_ij(x)
    double horizon = 1.0;

    // Declared Lipschitz constant of the coefficients; informational only,
    // never checked.
    double lipschitz_hint = 0.0;
};

// Uniform partition t_k = k h of [0, T] with h = T/m <= 1.
struct TimeGrid {
    int m = 1;
    double h = 1.0;
    double horizon = 1.0;

    static TimeGrid make(double horizon, int steps);
    double t(int k) const { return h * static_cast<double>(k); }
};

// Margin below which a strictly-positive condition is treated as violated;
// guards against float noise on constant-cost models.
inline constexpr double kStrictTol = 1e-12;

struct ValidationIssue {
    std::string condition;  // which requirement failed
    Vec x;
    int i = -1;
    int j = -1;
    int k = -1;  // only set for the triangular condition
    double margin = 0.0;
};

struct ValidationReport {
    bool passed = true;
    // Smallest observed c_ij over samples and j != i (+inf when q == 1).
    double min_cost = std::numeric_limits<double>::infinity();
    // Smallest observed c_ij + c_jk - c_ik over samples and j != i, k.
    double min_triangle = std::numeric_limits<double>::infinity();
    // Smallest observed |c_ii| over samples (should be ~0).
    double max_diagonal = 0.0;
    // Terminal check: smallest g_i(x) - (g_j(x) - c_ij(x)) over samples, j != i.
    double worst_margin = std::numeric_limits<double>::infinity();
    std::vector<ValidationIssue> issues;  // capped; empty when passed
};

// Checks the triangular cost structure (zero diagonal, strictly positive
// off-diagonal, strict triangle slack) at every sample point. Violations are
// reported, not thrown.
ValidationReport validate_costs(const SwitchingModel& model,
                                const std::vector<Vec>& sample_points);

// Checks g_i(x) >= max_j [g_j(x) - c_ij(x)] at every sample point.
ValidationReport validate_terminal(const SwitchingModel& model,
                                   const std::vector<Vec>& sample_points);

std::string describe(const ValidationReport& report);

}  // namespace switchq
