#include "switchq/gaussian_quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "lloyd_detail.hpp"
#include "switchq/parallel.hpp"
#include "switchq/rng.hpp"

namespace switchq {

namespace {

constexpr std::size_t kGrain = 8192;
constexpr double kLloydRelTol = 1e-6;

// Labels for the disjoint sample streams of one build.
enum : std::uint64_t { kTrainStream = 0, kWeightStream = 1, kClvqStream = 2 };

std::vector<double> draw_gaussians(std::uint64_t seed, std::uint64_t label,
                                   std::size_t n, int d, std::size_t chunk_offset) {
    std::vector<double> out(n * static_cast<std::size_t>(d));
    const std::uint64_t base = substream(seed, label);
    parallel_chunks(n, kGrain, [&](std::size_t c, std::size_t b, std::size_t e) {
        Rng rng = stream_rng(base, c + chunk_offset);
        for (std::size_t i = b; i < e; ++i)
            for (int k = 0; k < d; ++k)
                out[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] =
                    rng.normal();
    });
    return out;
}

struct WeightEstimate {
    std::vector<double> weights;
    double distortion = 0.0;
    bool all_positive = true;
};

// Voronoi-cell probabilities and the L2 error on an independent sample.
WeightEstimate estimate_weights(const GaussianQuantizer& q, std::uint64_t seed,
                                std::size_t n, std::size_t chunk_offset) {
    const int N = q.size();
    const int d = q.d;
    const std::vector<double> sample = draw_gaussians(seed, kWeightStream, n, d, chunk_offset);

    std::vector<double> pts1;
    if (d == 1) {
        pts1.resize(N);
        for (int l = 0; l < N; ++l) pts1[l] = q.points(l, 0);
    }

    struct CountState {
        std::vector<std::int64_t> counts;
        double sq = 0.0;
    };
    std::vector<CountState> states(chunk_count(n, kGrain));
    parallel_chunks(n, kGrain, [&](std::size_t c, std::size_t b, std::size_t e) {
        CountState& st = states[c];
        st.counts.assign(N, 0);
        for (std::size_t i = b; i < e; ++i) {
            const double* x = sample.data() + i * static_cast<std::size_t>(d);
            const int l = (d == 1) ? detail::nearest_sorted1(pts1, x[0])
                                   : detail::nearest_row(q.points, x);
            st.counts[l]++;
            double d2 = 0.0;
            for (int cc = 0; cc < d; ++cc) {
                const double t = x[cc] - q.points(l, cc);
                d2 += t * t;
            }
            st.sq += d2;
        }
    });
    std::vector<std::int64_t> counts(N, 0);
    double sq = 0.0;
    for (const CountState& st : states) {
        for (int l = 0; l < N; ++l) counts[l] += st.counts[l];
        sq += st.sq;
    }

    WeightEstimate est;
    est.weights.resize(N);
    for (int l = 0; l < N; ++l) {
        est.weights[l] = static_cast<double>(counts[l]) / static_cast<double>(n);
        if (counts[l] == 0) est.all_positive = false;
    }
    est.distortion = std::sqrt(sq / static_cast<double>(n));
    return est;
}

// Weights with empty-cell retries (doubling the sample up to three times).
WeightEstimate weights_with_retries(const GaussianQuantizer& q, std::uint64_t seed,
                                    std::size_t n) {
    std::size_t chunk_offset = 0;
    std::size_t draw = n;
    for (int attempt = 0; attempt < 4; ++attempt) {
        WeightEstimate est = estimate_weights(q, seed, draw, chunk_offset);
        if (est.all_positive) return est;
        chunk_offset += chunk_count(draw, kGrain) + 1;
        draw *= 2;
    }
    throw std::runtime_error(
        "build_gaussian_quantizer: a Voronoi cell stayed empty while estimating weights");
}

PointMat clvq_train(int d, int N, std::size_t n_steps, std::uint64_t seed) {
    // Deterministic start: Lloyd's quantile/sample-row initialisation applied
    // to a small warmup sample, then the stochastic competitive loop.
    const std::size_t warm = std::max<std::size_t>(static_cast<std::size_t>(N) * 16, 4096);
    const std::vector<double> init_sample = draw_gaussians(seed, kTrainStream, warm, d, 0);
    detail::LloydResult init = detail::lloyd_train(init_sample.data(), warm, d, N, 1, 0.0, seed);
    PointMat points = init.points;
    if (points.rows() < N)
        throw std::runtime_error("clvq_train: degenerate warmup sample");

    Rng rng = stream_rng(substream(seed, kClvqStream), 0);
    Vec x(d);
    const double gamma0 = 0.3;
    const double c = static_cast<double>(n_steps) / 10.0;
    for (std::size_t t = 0; t < n_steps; ++t) {
        for (int k = 0; k < d; ++k) x[k] = rng.normal();
        const int l = detail::nearest_row(points, x.data());
        const double gamma = gamma0 * c / (c + static_cast<double>(t));
        for (int k = 0; k < d; ++k) points(l, k) += gamma * (x[k] - points(l, k));
    }
    if (d == 1) {
        std::vector<double> w(points.data(), points.data() + N);
        std::sort(w.begin(), w.end());
        for (int l = 0; l < N; ++l) points(l, 0) = w[l];
    }
    return points;
}

void check_invariants(const GaussianQuantizer& q, const char* who) {
    const int N = q.size();
    double sum = 0.0;
    for (int l = 0; l < N; ++l) {
        if (!(q.weights[l] > 0.0))
            throw std::runtime_error(std::string(who) + ": nonpositive weight");
        sum += q.weights[l];
    }
    if (std::abs(sum - 1.0) > 1e-10)
        throw std::runtime_error(std::string(who) + ": weights sum to " + std::to_string(sum));
    for (int a = 0; a < N; ++a)
        for (int b = a + 1; b < N; ++b)
            if ((q.points.row(a) - q.points.row(b)).cwiseAbs().maxCoeff() == 0.0)
                throw std::runtime_error(std::string(who) + ": duplicate points");
}

double mean_residual_of(const GaussianQuantizer& q) {
    Vec mean = Vec::Zero(q.d);
    for (int l = 0; l < q.size(); ++l)
        mean += q.weights[l] * q.points.row(l).transpose();
    return mean.norm();
}

}  // namespace

int GaussianQuantizer::quantize(const Vec& v) const {
    if (size() == 0) throw std::logic_error("GaussianQuantizer::quantize: empty quantizer");
    if (d == 1) return quantize1(v[0]);
    return detail::nearest_row(points, v.data());
}

int GaussianQuantizer::quantize1(double v) const {
    const int N = size();
    int lo = 0, hi = N - 1;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (v > 0.5 * (points(mid, 0) + points(mid + 1, 0)))
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

GaussianQuantizer build_gaussian_quantizer(int d, int N, QuantMethod method,
                                           std::size_t n_samples, int max_iters,
                                           std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("build_gaussian_quantizer: d must be >= 1");
    if (N < 1) throw std::invalid_argument("build_gaussian_quantizer: N must be >= 1");
    const std::size_t min_samples =
        std::max<std::size_t>(1000, static_cast<std::size_t>(N) * 8);
    if (n_samples < min_samples)
        throw std::invalid_argument(
            "build_gaussian_quantizer: n_samples must be >> N (need at least " +
            std::to_string(min_samples) + ")");

    GaussianQuantizer q;
    q.d = d;
    if (method == QuantMethod::lloyd_mc) {
        const std::vector<double> sample = draw_gaussians(seed, kTrainStream, n_samples, d, 0);
        detail::LloydResult trained =
            detail::lloyd_train(sample.data(), n_samples, d, N, max_iters, kLloydRelTol, seed);
        q.points = std::move(trained.points);
        q.lloyd_history = std::move(trained.history);
    } else {
        q.points = clvq_train(d, N, n_samples, seed);
    }
    if (q.points.rows() != N)
        throw std::runtime_error("build_gaussian_quantizer: training collapsed the grid");

    if (d == 1) {
        // Symmetrise: w <- (w - reverse(w)) / 2 keeps the ascending order and
        // makes the set exactly symmetric (middle point exactly 0 for odd N).
        PointMat sym(N, 1);
        for (int l = 0; l < N; ++l)
            sym(l, 0) = 0.5 * (q.points(l, 0) - q.points(N - 1 - l, 0));
        q.points = std::move(sym);

        WeightEstimate est = weights_with_retries(q, seed, n_samples);
        q.weights.resize(N);
        for (int l = 0; l < N; ++l)
            q.weights[l] = 0.5 * (est.weights[l] + est.weights[N - 1 - l]);
        q.distortion = est.distortion;

        // Mirror pairs cancel exactly; sum them pairwise so the stored
        // residual is exactly zero.
        double resid = 0.0;
        for (int l = 0; l < N / 2; ++l)
            resid += q.weights[l] * q.points(l, 0) +
                     q.weights[N - 1 - l] * q.points(N - 1 - l, 0);
        q.mean_residual = std::abs(resid);
    } else {
        WeightEstimate first = weights_with_retries(q, seed, n_samples);
        Vec mean = Vec::Zero(d);
        for (int l = 0; l < N; ++l)
            mean += first.weights[l] * q.points.row(l).transpose();
        q.points.rowwise() -= mean.transpose();

        WeightEstimate second = weights_with_retries(q, seed + 0x9e37, n_samples);
        q.weights = std::move(second.weights);
        q.distortion = second.distortion;
        q.mean_residual = mean_residual_of(q);
    }

    check_invariants(q, "build_gaussian_quantizer");
    return q;
}

void save_quantizer(const GaussianQuantizer& q, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_quantizer: cannot open " + path);
    os << "GQ1\n" << q.d << ' ' << q.size() << "\n";
    char buf[40];
    for (int l = 0; l < q.size(); ++l) {
        for (int c = 0; c < q.d; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g ", q.points(l, c));
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g\n", q.weights[l]);
        os << buf;
    }
    if (!os) throw std::runtime_error("save_quantizer: write failed for " + path);
}

GaussianQuantizer load_quantizer(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_quantizer: cannot open " + path);
    std::string magic;
    if (!std::getline(is, magic) || magic != "GQ1")
        throw std::runtime_error("load_quantizer: bad magic line (expected GQ1)");
    int d = 0, N = 0;
    is >> d >> N;
    if (!is || d < 1 || N < 1)
        throw std::runtime_error("load_quantizer: malformed header");
    GaussianQuantizer q;
    q.d = d;
    q.points.resize(N, d);
    q.weights.resize(N);
    for (int l = 0; l < N; ++l) {
        for (int c = 0; c < d; ++c) is >> q.points(l, c);
        is >> q.weights[l];
        if (!is)
            throw std::runtime_error("load_quantizer: truncated or dimension-mismatched line " +
                                     std::to_string(l));
    }
    double trailing;
    if (is >> trailing)
        throw std::runtime_error("load_quantizer: trailing data (dimension mismatch?)");
    if (d == 1) {
        // The d == 1 nearest-point search assumes ascending points; keep that
        // invariant for externally produced files.
        std::vector<std::pair<double, double>> rows(N);
        for (int l = 0; l < N; ++l) rows[l] = {q.points(l, 0), q.weights[l]};
        std::sort(rows.begin(), rows.end());
        for (int l = 0; l < N; ++l) {
            q.points(l, 0) = rows[l].first;
            q.weights[l] = rows[l].second;
        }
    }
    check_invariants(q, "load_quantizer");
    q.distortion = std::numeric_limits<double>::quiet_NaN();  // not persisted
    q.mean_residual = mean_residual_of(q);
    return q;
}

}  // namespace switchq
