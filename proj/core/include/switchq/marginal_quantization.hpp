#pragma once

#include <cstdint>
#include <string>

#include "switchq/model.hpp"

namespace switchq {

// Marginal quantization of the uncontrolled Euler chain: one grid per time
// step, cell probabilities, and Monte-Carlo transition matrices between
// consecutive Voronoi tessellations.
struct MarginalQuantization {
    int d = 1;
    int m = 1;
    double h = 1.0;
    std::uint64_t seed = 0;
    std::size_t n_mc = 0;

    std::vector<PointMat> grids;                    // k = 0..m, N_k x d
    std::vector<std::vector<double>> weights;       // p_k, per grid point
    std::vector<Mat> transitions;                   // k = 0..m-1, N_k x N_{k+1}
    std::vector<std::vector<char>> row_flagged;     // source rows never visited
    std::vector<double> grid_distortion;            // training L2 error per k
    std::vector<Vec> sample_mean;                   // estimation-phase mean of X_k
    std::vector<Vec> sample_se;                     // standard error of that mean

    int size(int k) const { return static_cast<int>(grids[k].rows()); }
    std::size_t flagged_rows() const;
};

// Grid sizes N_1..N_m splitting a stack of nbar points with the
// t_k^{d/(2(d+1))} profile (ceilings as printed, overshoot accepted). The
// initial grid is the deterministic point x0 and takes no stack space.
std::vector<int> allocate_grid_sizes(const TimeGrid& tg, int d, int nbar);

// Per-step grids trained by fixed-sample Lloyd on n_train simulated paths;
// grids[0] = {x0}. Degenerate marginals (fewer distinct values than the
// requested size) are pruned to the distinct values.
std::vector<PointMat> train_marginal_grids(const SwitchingModel& model, const Vec& x0,
                                           const TimeGrid& tg, const std::vector<int>& sizes,
                                           std::size_t n_train, int max_iters,
                                           std::uint64_t seed);

// Joint Voronoi-cell occupation counts over n_mc fresh paths. Rows of
// never-visited source cells are filled with a point mass on the nearest
// visited point at k+1 and flagged. Pass the training distortions through
// `grid_distortion` if available.
MarginalQuantization estimate_transitions(const SwitchingModel& model, const Vec& x0,
                                          const TimeGrid& tg, std::vector<PointMat> grids,
                                          std::size_t n_mc, std::uint64_t seed,
                                          std::vector<double> grid_distortion = {});

// Versioned text format ("MQ1") holding grids, marginal weights, sparse
// transition triples "k l l' pi" and flagged rows, so the Monte-Carlo phase
// can be cached offline.
void save_marginal(const MarginalQuantization& mq, const std::string& path);
MarginalQuantization load_marginal(const std::string& path);

}  // namespace switchq
