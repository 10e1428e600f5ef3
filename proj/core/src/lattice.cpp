#include "switchq/lattice.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace switchq {

namespace {

// Half-integer coordinates round toward the smaller integer so equidistant
// points resolve to the lexicographically smallest node.
std::int64_t round_half_down_impl(double u) {
    return static_cast<std::int64_t>(std::ceil(u - 0.5));
}

}  // namespace

bool LatticeGrid::in_ball_steps2(double norm2) const {
    const double r = radius_ + ball_tol_;
    return norm2 <= r * r;
}

std::int64_t LatticeGrid::round_half_down(double u) const { return round_half_down_impl(u); }

std::size_t LatticeGrid::box_index(const std::int64_t* z) const {
    std::size_t idx = 0;
    for (int c = 0; c < d_; ++c)
        idx = idx * static_cast<std::size_t>(side_) +
              static_cast<std::size_t>(z[c] + m_);
    return idx;
}

LatticeGrid LatticeGrid::build(int d, double delta, double radius, const Vec& center,
                               std::size_t node_budget) {
    if (d < 1 || d > 16)
        throw std::invalid_argument("LatticeGrid: d must be in [1, 16]");
    if (!(delta > 0.0)) throw std::invalid_argument("LatticeGrid: delta must be > 0");
    const double step = delta / static_cast<double>(d);
    if (!(radius >= step))
        throw std::invalid_argument("LatticeGrid: radius must be >= delta/d");

    LatticeGrid grid;
    grid.d_ = d;
    grid.delta_ = delta;
    grid.step_ = step;
    grid.inv_step_ = 1.0 / step;
    grid.radius_ = radius;
    grid.ball_tol_ = 1e-12 * std::max(1.0, radius);
    grid.center_ = center.size() == 0 ? Vec::Zero(d) : center;
    if (grid.center_.size() != d)
        throw std::invalid_argument("LatticeGrid: center dimension mismatch");
    grid.center0_ = grid.center_[0];

    const double ratio = radius / step;
    grid.m_ = static_cast<std::int64_t>(std::floor(ratio * (1.0 + 1e-13) + 1e-9));
    grid.side_ = 2 * grid.m_ + 1;

    // Budget check on the bounding box before anything is allocated.
    double box_cells = 1.0;
    for (int c = 0; c < d; ++c) box_cells *= static_cast<double>(grid.side_);
    if (box_cells > static_cast<double>(node_budget))
        throw std::invalid_argument(
            "LatticeGrid: bounding box of " + std::to_string(box_cells) +
            " cells exceeds the node budget of " + std::to_string(node_budget));
    const std::size_t n_box = static_cast<std::size_t>(box_cells);

    // For d == 1 the box [-m, m] is exactly the lattice-in-interval, so every
    // cell is a node and project1 can map indices without a table.
    grid.box_to_node_.assign(n_box, -1);
    std::vector<std::int64_t> z(d, -grid.m_);
    std::size_t count = 0;
    for (std::size_t cell = 0; cell < n_box; ++cell) {
        double norm2 = 0.0;
        for (int c = 0; c < d; ++c) {
            const double v = static_cast<double>(z[c]) * step;
            norm2 += v * v;
        }
        if (d == 1 || grid.in_ball_steps2(norm2)) ++count;
        for (int c = d - 1; c >= 0; --c) {
            if (++z[c] <= grid.m_) break;
            z[c] = -grid.m_;
        }
    }
    grid.nodes_.resize(static_cast<Eigen::Index>(count), d);

    std::fill(z.begin(), z.end(), -grid.m_);
    std::int32_t node_id = 0;
    for (std::size_t cell = 0; cell < n_box; ++cell) {
        double norm2 = 0.0;
        for (int c = 0; c < d; ++c) {
            const double v = static_cast<double>(z[c]) * step;
            norm2 += v * v;
        }
        if (d == 1 || grid.in_ball_steps2(norm2)) {
            for (int c = 0; c < d; ++c)
                grid.nodes_(node_id, c) = grid.center_[c] + static_cast<double>(z[c]) * step;
            grid.box_to_node_[cell] = node_id++;
        }
        for (int c = d - 1; c >= 0; --c) {
            if (++z[c] <= grid.m_) break;
            z[c] = -grid.m_;
        }
    }
    return grid;
}

std::size_t LatticeGrid::project_ptr(const double* x) const {
    if (d_ == 1) return project1(x[0]);

    std::int64_t z[16];
    double norm2 = 0.0;
    bool in_box = true;
    const double box_lim = static_cast<double>(m_ + 1);
    for (int c = 0; c < d_; ++c) {
        double u = (x[c] - center_[c]) * inv_step_;
        if (std::isnan(u))
            throw std::invalid_argument("LatticeGrid::project: NaN coordinate");
        // Clamp in double space: anything past the box is out-of-box anyway
        // and casting an overflowing double would be undefined.
        if (u > box_lim) u = box_lim;
        if (u < -box_lim) u = -box_lim;
        z[c] = round_half_down_impl(u);
        if (z[c] > m_ || z[c] < -m_) in_box = false;
        const double v = static_cast<double>(z[c]) * step_;
        norm2 += v * v;
    }
    if (in_box && in_ball_steps2(norm2)) {
        const std::int32_t id = box_to_node_[box_index(z)];
        // Rounding landed inside the ball: nearest node of the full lattice.
        if (id >= 0) return static_cast<std::size_t>(id);
    }

    // Radial fallback: pull x to radius R - delta/2 and search the nearby box.
    double r2 = 0.0;
    for (int c = 0; c < d_; ++c) {
        const double off = x[c] - center_[c];
        r2 += off * off;
    }
    const double r = std::sqrt(r2);
    const double target = std::max(0.0, std::min(r, radius_ - 0.5 * delta_));
    // scale == 0 covers both r == 0 and r == inf (overflowed states collapse
    // to the center; the projection bound is vacuous for them).
    const double scale = (r > 0.0 && std::isfinite(r)) ? target / r : 0.0;
    std::int64_t zc[16];
    for (int c = 0; c < d_; ++c) {
        const double off = scale > 0.0 ? (x[c] - center_[c]) * scale : 0.0;
        zc[c] = round_half_down_impl(off * inv_step_);
        if (zc[c] > m_) zc[c] = m_;
        if (zc[c] < -m_) zc[c] = -m_;
    }

    // Candidates: pulled rounding plus a +/-2-step box around it, keeping the
    // in-ball node closest to x (ties: lexicographically smallest).
    std::int64_t cand[16];
    std::int64_t best_z[16];
    double best_d2 = -1.0;
    std::int64_t offv[16];
    for (int c = 0; c < d_; ++c) offv[c] = -2;
    for (;;) {
        bool ok = true;
        double cnorm2 = 0.0;
        for (int c = 0; c < d_; ++c) {
            cand[c] = zc[c] + offv[c];
            if (cand[c] > m_ || cand[c] < -m_) {
                ok = false;
                break;
            }
            const double v = static_cast<double>(cand[c]) * step_;
            cnorm2 += v * v;
        }
        if (ok && in_ball_steps2(cnorm2)) {
            double d2 = 0.0;
            for (int c = 0; c < d_; ++c) {
                const double t =
                    x[c] - (center_[c] + static_cast<double>(cand[c]) * step_);
                d2 += t * t;
            }
            bool better = best_d2 < 0.0 || d2 < best_d2;
            if (!better && d2 == best_d2) {
                for (int c = 0; c < d_; ++c) {
                    if (cand[c] != best_z[c]) {
                        better = cand[c] < best_z[c];
                        break;
                    }
                }
            }
            if (better) {
                best_d2 = d2;
                for (int c = 0; c < d_; ++c) best_z[c] = cand[c];
            }
        }
        int c = d_ - 1;
        for (; c >= 0; --c) {
            if (++offv[c] <= 2) break;
            offv[c] = -2;
        }
        if (c < 0) break;
    }
    if (best_d2 < 0.0)
        throw std::logic_error("LatticeGrid::project: no candidate node found");

    const std::int32_t id = box_to_node_[box_index(best_z)];
    assert(id >= 0);

#ifndef NDEBUG
    {
        double xr = 0.0, pd = 0.0;
        for (int c = 0; c < d_; ++c) {
            const double off = x[c] - center_[c];
            xr += off * off;
            const double t = x[c] - nodes_(id, c);
            pd += t * t;
        }
        const double bound = std::max(std::sqrt(xr) - radius_, 0.0) + delta_;
        assert(std::sqrt(pd) <= bound + 1e-9 * (1.0 + bound));
    }
#endif
    return static_cast<std::size_t>(id);
}

}  // namespace switchq
