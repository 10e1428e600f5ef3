#include "lloyd_detail.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "switchq/parallel.hpp"
#include "switchq/rng.hpp"

namespace switchq::detail {

namespace {

constexpr std::size_t kGrain = 8192;

double sq_dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
        const double t = a[c] - b[c];
        s += t * t;
    }
    return s;
}

// ---- one-dimensional fast path: sorted sample + prefix sums -----------------

LloydResult lloyd_train_1d(const double* sample, std::size_t n, int N,
                           int max_iters, double rel_tol) {
    std::vector<double> xs(sample, sample + n);
    std::sort(xs.begin(), xs.end());

    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        s1[i + 1] = s1[i] + xs[i];
        s2[i + 1] = s2[i] + xs[i] * xs[i];
    }

    std::size_t distinct = 1;
    for (std::size_t i = 1; i < n; ++i)
        if (xs[i] != xs[i - 1]) ++distinct;
    if (distinct <= static_cast<std::size_t>(N)) {
        LloydResult out;
        out.points.resize(static_cast<Eigen::Index>(distinct), 1);
        Eigen::Index r = 0;
        out.points(r++, 0) = xs[0];
        for (std::size_t i = 1; i < n; ++i)
            if (xs[i] != xs[i - 1]) out.points(r++, 0) = xs[i];
        out.history.push_back(0.0);
        return out;
    }

    std::vector<double> w(N);
    for (int l = 0; l < N; ++l)
        w[l] = xs[static_cast<std::size_t>((l + 0.5) * static_cast<double>(n) / N)];
    std::sort(w.begin(), w.end());

    LloydResult out;
    std::vector<std::size_t> edge(N + 1);
    int reseeds_left = N;
    double prev = -1.0;
    for (int iter = 0; iter < max_iters; ++iter) {
        // Cell l = (mid_{l-1}, mid_l]; boundary samples fall to the lower cell.
        edge[0] = 0;
        edge[N] = n;
        for (int l = 1; l < N; ++l) {
            const double mid = 0.5 * (w[l - 1] + w[l]);
            edge[l] = static_cast<std::size_t>(
                std::upper_bound(xs.begin(), xs.end(), mid) - xs.begin());
        }
        double sq = 0.0;
        for (int l = 0; l < N; ++l) {
            const std::size_t lo = edge[l], hi = edge[l + 1];
            const double cnt = static_cast<double>(hi - lo);
            sq += (s2[hi] - s2[lo]) - 2.0 * w[l] * (s1[hi] - s1[lo]) + w[l] * w[l] * cnt;
        }
        const double dist = std::sqrt(std::max(0.0, sq) / static_cast<double>(n));
        out.history.push_back(dist);

        std::vector<double> next(N);
        std::vector<int> empty;
        for (int l = 0; l < N; ++l) {
            const std::size_t lo = edge[l], hi = edge[l + 1];
            if (hi > lo)
                next[l] = (s1[hi] - s1[lo]) / static_cast<double>(hi - lo);
            else
                empty.push_back(l);
        }
        std::vector<double> used;
        for (int e : empty) {
            if (reseeds_left-- <= 0)
                throw std::runtime_error("lloyd_train: empty cell re-seeding exhausted");
            // Farthest sample from its centroid; on sorted data the extremes
            // of each cell are the only candidates. Values consumed by an
            // earlier re-seed this iteration are skipped.
            double best = -1.0, pick = w[e];
            auto consider = [&](double v, double dist) {
                if (dist <= best) return;
                if (std::find(used.begin(), used.end(), v) != used.end()) return;
                best = dist;
                pick = v;
            };
            for (int l = 0; l < N; ++l) {
                const std::size_t lo = edge[l], hi = edge[l + 1];
                if (hi <= lo) continue;
                consider(xs[lo], std::abs(xs[lo] - w[l]));
                consider(xs[hi - 1], std::abs(xs[hi - 1] - w[l]));
            }
            used.push_back(pick);
            next[e] = pick;
        }
        std::sort(next.begin(), next.end());
        w = std::move(next);

        if (prev >= 0.0 && prev - dist < rel_tol * std::max(prev, 1e-300)) {
            prev = dist;
            break;
        }
        prev = dist;
    }

    out.points.resize(N, 1);
    for (int l = 0; l < N; ++l) out.points(l, 0) = w[l];
    return out;
}

// ---- generic dimension ------------------------------------------------------

struct AssignState {
    Mat sums;
    std::vector<std::int64_t> counts;
    double sq = 0.0;
    double far_d2 = -1.0;
    std::size_t far_idx = 0;
    bool init = false;
};

// Full pass over the sample picking the point farthest from its centroid,
// skipping indices already consumed by earlier re-seeds this iteration.
std::size_t scan_farthest(const double* sample, std::size_t n, int d, const PointMat& points,
                          const std::vector<std::size_t>& used) {
    double best = -1.0;
    std::size_t pick = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::find(used.begin(), used.end(), i) != used.end()) continue;
        const double* x = sample + i * static_cast<std::size_t>(d);
        const int l = nearest_row(points, x);
        const double d2 = sq_dist(x, points.row(l).data(), d);
        if (d2 > best) {
            best = d2;
            pick = i;
        }
    }
    return pick;
}

LloydResult lloyd_train_nd(const double* sample, std::size_t n, int d, int N,
                           int max_iters, double rel_tol, std::uint64_t seed) {
    // Initial centroids: N distinct sample rows drawn from the seed stream.
    Rng rng = stream_rng(seed, 0x11d);
    PointMat points(N, d);
    std::vector<std::size_t> chosen;
    int placed = 0;
    for (std::size_t attempt = 0; attempt < 200 * static_cast<std::size_t>(N) && placed < N;
         ++attempt) {
        const std::size_t idx = rng.next_u64() % n;
        const double* x = sample + idx * static_cast<std::size_t>(d);
        bool dup = false;
        for (int l = 0; l < placed && !dup; ++l)
            dup = sq_dist(x, points.row(l).data(), d) == 0.0;
        if (dup) continue;
        for (int c = 0; c < d; ++c) points(placed, c) = x[c];
        chosen.push_back(idx);
        ++placed;
    }
    if (placed < N) {
        // Sample has few distinct rows; fall back to scanning them out.
        for (std::size_t i = 0; i < n && placed < N; ++i) {
            const double* x = sample + i * static_cast<std::size_t>(d);
            bool dup = false;
            for (int l = 0; l < placed && !dup; ++l)
                dup = sq_dist(x, points.row(l).data(), d) == 0.0;
            if (!dup) {
                for (int c = 0; c < d; ++c) points(placed, c) = x[c];
                ++placed;
            }
        }
        if (placed < N) points.conservativeResize(placed, d);
        N = placed;
    }

    LloydResult out;
    int reseeds_left = N;
    double prev = -1.0;
    const std::size_t chunks = chunk_count(n, kGrain);

    for (int iter = 0; iter < max_iters; ++iter) {
        std::vector<AssignState> states(chunks);
        parallel_chunks(n, kGrain, [&](std::size_t c, std::size_t b, std::size_t e) {
            AssignState& st = states[c];
            st.sums = Mat::Zero(N, d);
            st.counts.assign(N, 0);
            st.init = true;
            for (std::size_t i = b; i < e; ++i) {
                const double* x = sample + i * static_cast<std::size_t>(d);
                const int l = nearest_row(points, x);
                for (int cc = 0; cc < d; ++cc) st.sums(l, cc) += x[cc];
                st.counts[l]++;
                const double d2 = sq_dist(x, points.row(l).data(), d);
                st.sq += d2;
                if (d2 > st.far_d2) {
                    st.far_d2 = d2;
                    st.far_idx = i;
                }
            }
        });
        Mat sums = Mat::Zero(N, d);
        std::vector<std::int64_t> counts(N, 0);
        double sq = 0.0, far_d2 = -1.0;
        std::size_t far_idx = 0;
        for (const AssignState& st : states) {
            if (!st.init) continue;
            sums += st.sums;
            for (int l = 0; l < N; ++l) counts[l] += st.counts[l];
            sq += st.sq;
            if (st.far_d2 > far_d2) {
                far_d2 = st.far_d2;
                far_idx = st.far_idx;
            }
        }
        const double dist = std::sqrt(std::max(0.0, sq) / static_cast<double>(n));
        out.history.push_back(dist);

        std::vector<std::size_t> used;
        for (int l = 0; l < N; ++l) {
            if (counts[l] > 0) {
                for (int c = 0; c < d; ++c)
                    points(l, c) = sums(l, c) / static_cast<double>(counts[l]);
            } else {
                if (reseeds_left-- <= 0)
                    throw std::runtime_error("lloyd_train: empty cell re-seeding exhausted");
                const std::size_t idx =
                    used.empty() ? far_idx : scan_farthest(sample, n, d, points, used);
                used.push_back(idx);
                for (int c = 0; c < d; ++c)
                    points(l, c) = sample[idx * static_cast<std::size_t>(d) + c];
            }
        }

        if (prev >= 0.0 && prev - dist < rel_tol * std::max(prev, 1e-300)) break;
        prev = dist;
    }

    out.points = std::move(points);
    return out;
}

}  // namespace

int nearest_row(const PointMat& points, const double* x) {
    const int N = static_cast<int>(points.rows());
    const int d = static_cast<int>(points.cols());
    int best = 0;
    double best_d2 = sq_dist(x, points.row(0).data(), d);
    for (int l = 1; l < N; ++l) {
        const double d2 = sq_dist(x, points.row(l).data(), d);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = l;
        }
    }
    return best;
}

int nearest_sorted1(const std::vector<double>& points, double v) {
    const int N = static_cast<int>(points.size());
    if (N == 1) return 0;
    // Cell l = (mid_{l-1}, mid_l]; scan via binary search over midpoints.
    int lo = 0, hi = N - 1;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (v > 0.5 * (points[mid] + points[mid + 1]))
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

LloydResult lloyd_train(const double* sample, std::size_t n, int d, int N,
                        int max_iters, double rel_tol, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("lloyd_train: empty sample");
    if (N < 1) throw std::invalid_argument("lloyd_train: N must be >= 1");
    if (d == 1) return lloyd_train_1d(sample, n, N, max_iters, rel_tol);
    return lloyd_train_nd(sample, n, d, N, max_iters, rel_tol, seed);
}

}  // namespace switchq::detail
