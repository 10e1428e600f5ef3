#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "switchq/model.hpp"

namespace switchq {

// Bounded lattice of step delta/d inside the closed ball B(center, R):
// nodes are center + (delta/d) z for integer vectors z with |step z| <= R.
// Projection is by the closest-neighbour rule with the guarantee
//   |x - proj(x)| <= max(|x - center| - R, 0) + delta.
class LatticeGrid {
public:
    // Enumerates the lattice. Refuses grids whose bounding box exceeds
    // node_budget cells, before any large allocation.
    static LatticeGrid build(int d, double delta, double radius,
                             const Vec& center = Vec(),
                             std::size_t node_budget = 100'000'000);

    int dim() const { return d_; }
    double delta() const { return delta_; }
    double step() const { return step_; }
    double radius() const { return radius_; }
    const Vec& center() const { return center_; }
    std::size_t size() const { return static_cast<std::size_t>(nodes_.rows()); }

    Vec node(std::size_t idx) const { return nodes_.row(static_cast<Eigen::Index>(idx)).transpose(); }
    const double* node_ptr(std::size_t idx) const {
        return nodes_.data() + idx * static_cast<std::size_t>(d_);
    }
    double node1(std::size_t idx) const { return nodes_(static_cast<Eigen::Index>(idx), 0); }
    const PointMat& nodes() const { return nodes_; }

    // Nearest node; ties resolved toward the lexicographically smallest node.
    std::size_t project(const Vec& x) const { return project_ptr(x.data()); }
    std::size_t project_ptr(const double* x) const;
    // d == 1 fast path (exact nearest: round then clamp to the interval).
    // Half-integer offsets round down so ties pick the smaller node. The
    // clamp happens in double space so overflowing and infinite coordinates
    // resolve to the boundary nodes; NaN is rejected.
    std::size_t project1(double x) const {
        const double u = (x - center0_) * inv_step_;
        if (std::isnan(u)) throw std::invalid_argument("LatticeGrid::project: NaN coordinate");
        if (u >= static_cast<double>(m_)) return static_cast<std::size_t>(2 * m_);
        if (u <= static_cast<double>(-m_)) return 0;
        const std::int64_t zi = static_cast<std::int64_t>(std::ceil(u - 0.5));
        return static_cast<std::size_t>(zi + m_);
    }

    // Integer extent per axis: coordinates run over [-M, M] lattice steps.
    std::int64_t extent() const { return m_; }

private:
    int d_ = 1;
    double delta_ = 1.0;
    double step_ = 1.0;
    double inv_step_ = 1.0;
    double radius_ = 1.0;
    double ball_tol_ = 0.0;  // slop added to R for in-ball tests
    double center0_ = 0.0;   // first coordinate of the center, for project1
    Vec center_;
    std::int64_t m_ = 0;           // per-axis extent in steps
    std::int64_t side_ = 1;        // 2m + 1
    std::vector<std::int32_t> box_to_node_;  // dense box lookup, -1 outside ball
    PointMat nodes_;

    bool in_ball_steps2(double step_norm2) const;
    std::int64_t round_half_down(double u) const;
    std::size_t box_index(const std::int64_t* z) const;
};

}  // namespace switchq
