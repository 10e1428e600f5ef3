#pragma once

#include <cstdint>
#include <string>

#include "switchq/model.hpp"

namespace switchq {

enum class QuantMethod { lloyd_mc, clvq };

// Finite approximation of N(0, I_d): support points with Voronoi-cell
// probabilities. Trained grids are near-optimal in L2; after the post-pass
// the point set has exactly zero weighted mean in one dimension (symmetric
// pairs cancel) and the centered mean residual is stored for d >= 2.
struct GaussianQuantizer {
    int d = 0;
    PointMat points;                     // N x d; sorted ascending when d == 1
    std::vector<double> weights;         // cell probabilities, sum to 1
    double distortion = 0.0;             // L2 error estimate on held-out sample
    double mean_residual = 0.0;          // |sum_l pi_l w_l| after post-pass
    std::vector<double> lloyd_history;   // per-iteration distortion (lloyd_mc only)

    int size() const { return static_cast<int>(points.rows()); }

    // Nearest point index, ties broken toward the lowest index.
    int quantize(const Vec& v) const;
    int quantize1(double v) const;  // d == 1 fast path, same tie rule

    Vec point(int l) const { return points.row(l).transpose(); }
};

// Trains an N-point quantizer of N(0, I_d) on n_samples simulated draws.
// lloyd_mc runs fixed-sample Lloyd iterations (distortion non-increasing on
// the training sample); clvq runs the stochastic competitive-learning loop.
// Weights and the distortion estimate come from an independent sample.
// Empty cells are re-seeded at the sample farthest from its centroid; the
// build fails once N re-seeds have been spent.
GaussianQuantizer build_gaussian_quantizer(int d, int N, QuantMethod method,
                                           std::size_t n_samples, int max_iters,
                                           std::uint64_t seed);

// Line-oriented text format, versioned by a leading "GQ1" magic line:
//   GQ1
//   <d> <N>
//   w_1 ... w_d pi     (N lines, full decimal precision)
void save_quantizer(const GaussianQuantizer& q, const std::string& path);
GaussianQuantizer load_quantizer(const std::string& path);

}  // namespace switchq
