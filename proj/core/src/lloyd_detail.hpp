#pragma once

// Fixed-sample Lloyd (k-means) trainer shared by the Gaussian quantizer and
// the marginal grid trainer. Internal to the library.

#include <cstdint>
#include <vector>

#include "switchq/model.hpp"

namespace switchq::detail {

struct LloydResult {
    PointMat points;              // trained centroids, sorted ascending if d == 1
    std::vector<double> history;  // L2 distortion after each assignment pass
};

// Trains min(N, #distinct rows) centroids on the fixed sample (n rows, d
// columns, row-major). Fewer-than-N distinct rows short-circuit to the
// distinct values (degenerate marginals). Empty Voronoi cells are re-seeded
// at the sample point farthest from its centroid; throws std::runtime_error
// once N re-seeds are exhausted. `seed` only drives the d >= 2 initial draw.
LloydResult lloyd_train(const double* sample, std::size_t n, int d, int N,
                        int max_iters, double rel_tol, std::uint64_t seed);

// Nearest-row index in an (N x d) point matrix, ties toward the lowest index.
int nearest_row(const PointMat& points, const double* x);

// d == 1 helper: index of the Voronoi cell of v for ascending points;
// boundary values go to the lower cell.
int nearest_sorted1(const std::vector<double>& points, double v);

}  // namespace switchq::detail
