#include "switchq/marginal_quantization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "lloyd_detail.hpp"
#include "switchq/euler.hpp"
#include "switchq/parallel.hpp"
#include "switchq/rng.hpp"

namespace switchq {

namespace {

constexpr std::size_t kGrain = 8192;
constexpr double kLloydRelTol = 1e-6;

enum : std::uint64_t { kTrainStream = 10, kTransitionStream = 11 };

void require_uncontrolled(const SwitchingModel& model, const Vec& x0, const char* who) {
    if (!has_regime_independent_dynamics(model, x0))
        throw std::invalid_argument(std::string(who) +
                                    ": marginal quantization requires an uncontrolled "
                                    "diffusion (b_i = b, sigma_i = sigma)");
}

}  // namespace

std::size_t MarginalQuantization::flagged_rows() const {
    std::size_t n = 0;
    for (const auto& layer : row_flagged)
        for (char f : layer) n += f != 0;
    return n;
}

std::vector<int> allocate_grid_sizes(const TimeGrid& tg, int d, int nbar) {
    if (nbar < tg.m)
        throw std::invalid_argument("allocate_grid_sizes: nbar must be >= m");
    const double expo = static_cast<double>(d) / (2.0 * (d + 1.0));
    std::vector<double> wk(tg.m);
    double total = 0.0;
    for (int k = 1; k <= tg.m; ++k) {
        wk[k - 1] = std::pow(tg.t(k), expo);
        total += wk[k - 1];
    }
    std::vector<int> sizes(tg.m);
    for (int k = 0; k < tg.m; ++k)
        sizes[k] = static_cast<int>(std::ceil(wk[k] * static_cast<double>(nbar) / total));
    return sizes;
}

std::vector<PointMat> train_marginal_grids(const SwitchingModel& model, const Vec& x0,
                                           const TimeGrid& tg, const std::vector<int>& sizes,
                                           std::size_t n_train, int max_iters,
                                           std::uint64_t seed) {
    require_uncontrolled(model, x0, "train_marginal_grids");
    if (static_cast<int>(sizes.size()) != tg.m)
        throw std::invalid_argument("train_marginal_grids: need one size per step k = 1..m");
    if (n_train == 0) throw std::invalid_argument("train_marginal_grids: n_train must be > 0");

    const int d = model.d;
    const int m = tg.m;
    const double sqh = std::sqrt(tg.h);

    // Per-step sample buffers, laid out [k][path][coord] for contiguous
    // per-layer training.
    std::vector<std::vector<double>> samples(m);
    for (int k = 0; k < m; ++k)
        samples[k].resize(n_train * static_cast<std::size_t>(d));

    const std::uint64_t base = substream(seed, kTrainStream);
    parallel_chunks(n_train, kGrain, [&](std::size_t c, std::size_t b, std::size_t e) {
        (void)c;
        Vec shock(d);
        for (std::size_t p = b; p < e; ++p) {
            Rng rng = stream_rng(base, p);
            Vec x = x0;
            for (int k = 0; k < m; ++k) {
                for (int cc = 0; cc < d; ++cc) shock[cc] = rng.normal();
                x += model.drift(x, 0) * tg.h + model.diffusion(x, 0) * (sqh * shock);
                double* slot = samples[k].data() + p * static_cast<std::size_t>(d);
                for (int cc = 0; cc < d; ++cc) slot[cc] = x[cc];
            }
        }
    });

    std::vector<PointMat> grids(m + 1);
    grids[0].resize(1, d);
    for (int cc = 0; cc < d; ++cc) grids[0](0, cc) = x0[cc];
    for (int k = 1; k <= m; ++k) {
        detail::LloydResult trained =
            detail::lloyd_train(samples[k - 1].data(), n_train, d, sizes[k - 1], max_iters,
                                kLloydRelTol, substream(seed, 100 + static_cast<std::uint64_t>(k)));
        grids[k] = std::move(trained.points);
        samples[k - 1].clear();
        samples[k - 1].shrink_to_fit();
    }
    return grids;
}

MarginalQuantization estimate_transitions(const SwitchingModel& model, const Vec& x0,
                                          const TimeGrid& tg, std::vector<PointMat> grids,
                                          std::size_t n_mc, std::uint64_t seed,
                                          std::vector<double> grid_distortion) {
    require_uncontrolled(model, x0, "estimate_transitions");
    if (static_cast<int>(grids.size()) != tg.m + 1)
        throw std::invalid_argument("estimate_transitions: need grids for k = 0..m");
    if (n_mc < 10'000)
        throw std::invalid_argument("estimate_transitions: n_mc must be >= 10^4");

    const int d = model.d;
    const int m = tg.m;
    const double sqh = std::sqrt(tg.h);

    MarginalQuantization mq;
    mq.d = d;
    mq.m = m;
    mq.h = tg.h;
    mq.seed = seed;
    mq.n_mc = n_mc;
    mq.grids = std::move(grids);
    mq.grid_distortion = std::move(grid_distortion);

    // Sorted views for the d == 1 nearest-cell search.
    std::vector<std::vector<double>> pts1(m + 1);
    if (d == 1)
        for (int k = 0; k <= m; ++k) {
            pts1[k].resize(mq.size(k));
            for (int l = 0; l < mq.size(k); ++l) pts1[k][l] = mq.grids[k](l, 0);
            if (!std::is_sorted(pts1[k].begin(), pts1[k].end()))
                throw std::logic_error("estimate_transitions: d==1 grids must be sorted");
        }

    // Joint counts: per k a dense N_k x N_{k+1} table, plus marginal counts.
    std::vector<std::size_t> joint_offset(m + 1, 0);
    for (int k = 0; k < m; ++k)
        joint_offset[k + 1] =
            joint_offset[k] +
            static_cast<std::size_t>(mq.size(k)) * static_cast<std::size_t>(mq.size(k + 1));
    const std::size_t joint_total = joint_offset[m];

    struct Counts {
        std::vector<std::int64_t> joint;
        std::vector<std::int64_t> marg;
    };
    Counts total;
    total.joint.assign(joint_total, 0);
    std::size_t marg_total = 0;
    std::vector<std::size_t> marg_offset(m + 2, 0);
    for (int k = 0; k <= m; ++k) {
        marg_offset[k + 1] = marg_offset[k] + static_cast<std::size_t>(mq.size(k));
    }
    marg_total = marg_offset[m + 1];
    total.marg.assign(marg_total, 0);

    // Per-chunk moment accumulators (folded in chunk order) for the sample
    // mean and its standard error at each step.
    const std::size_t chunks = chunk_count(n_mc, kGrain);
    std::vector<std::vector<double>> chunk_s1(chunks), chunk_s2(chunks);

    const std::uint64_t base = substream(seed, kTransitionStream);
    worker_reduce(
        n_mc, kGrain, total,
        [&](Counts& st, std::size_t chunk, std::size_t b, std::size_t e) {
            if (st.joint.empty()) {
                st.joint.assign(joint_total, 0);
                st.marg.assign(marg_total, 0);
            }
            std::vector<double>& s1 = chunk_s1[chunk];
            std::vector<double>& s2 = chunk_s2[chunk];
            s1.assign(static_cast<std::size_t>(m + 1) * d, 0.0);
            s2.assign(static_cast<std::size_t>(m + 1) * d, 0.0);
            Vec shock(d);
            const int cell0 = (mq.size(0) == 1)
                                  ? 0
                                  : (d == 1 ? detail::nearest_sorted1(pts1[0], x0[0])
                                            : detail::nearest_row(mq.grids[0], x0.data()));
            for (std::size_t p = b; p < e; ++p) {
                Rng rng = stream_rng(base, p);
                Vec x = x0;
                int cell = cell0;
                st.marg[marg_offset[0] + static_cast<std::size_t>(cell)]++;
                for (int k = 0; k < m; ++k) {
                    for (int cc = 0; cc < d; ++cc) shock[cc] = rng.normal();
                    x += model.drift(x, 0) * tg.h + model.diffusion(x, 0) * (sqh * shock);
                    int next;
                    if (d == 1)
                        next = detail::nearest_sorted1(pts1[k + 1], x[0]);
                    else
                        next = detail::nearest_row(mq.grids[k + 1], x.data());
                    st.joint[joint_offset[k] +
                             static_cast<std::size_t>(cell) * mq.size(k + 1) +
                             static_cast<std::size_t>(next)]++;
                    st.marg[marg_offset[k + 1] + static_cast<std::size_t>(next)]++;
                    for (int cc = 0; cc < d; ++cc) {
                        s1[static_cast<std::size_t>(k + 1) * d + cc] += x[cc];
                        s2[static_cast<std::size_t>(k + 1) * d + cc] += x[cc] * x[cc];
                    }
                    cell = next;
                }
            }
        },
        [](Counts& into, Counts& from) {
            if (from.joint.empty()) return;
            for (std::size_t i = 0; i < into.joint.size(); ++i) into.joint[i] += from.joint[i];
            for (std::size_t i = 0; i < into.marg.size(); ++i) into.marg[i] += from.marg[i];
        });

    // Moments folded in chunk order.
    std::vector<double> s1(static_cast<std::size_t>(m + 1) * d, 0.0);
    std::vector<double> s2(static_cast<std::size_t>(m + 1) * d, 0.0);
    for (std::size_t c = 0; c < chunks; ++c) {
        for (std::size_t i = 0; i < s1.size(); ++i) {
            s1[i] += chunk_s1[c][i];
            s2[i] += chunk_s2[c][i];
        }
    }
    mq.sample_mean.resize(m + 1);
    mq.sample_se.resize(m + 1);
    const double n = static_cast<double>(n_mc);
    for (int k = 0; k <= m; ++k) {
        Vec mean(d), se(d);
        for (int cc = 0; cc < d; ++cc) {
            if (k == 0) {
                mean[cc] = x0[cc];
                se[cc] = 0.0;
                continue;
            }
            const double mu = s1[static_cast<std::size_t>(k) * d + cc] / n;
            const double var =
                std::max(0.0, s2[static_cast<std::size_t>(k) * d + cc] / n - mu * mu);
            mean[cc] = mu;
            se[cc] = std::sqrt(var / n);
        }
        mq.sample_mean[k] = mean;
        mq.sample_se[k] = se;
    }

    // Normalise rows; fill and flag never-visited source rows.
    mq.weights.resize(m + 1);
    for (int k = 0; k <= m; ++k) {
        mq.weights[k].resize(mq.size(k));
        for (int l = 0; l < mq.size(k); ++l)
            mq.weights[k][l] =
                static_cast<double>(total.marg[marg_offset[k] + l]) / n;
    }
    mq.transitions.resize(m);
    mq.row_flagged.resize(m);
    for (int k = 0; k < m; ++k) {
        const int nk = mq.size(k), nk1 = mq.size(k + 1);
        Mat pi(nk, nk1);
        mq.row_flagged[k].assign(nk, 0);
        for (int l = 0; l < nk; ++l) {
            std::int64_t row_total = 0;
            for (int l2 = 0; l2 < nk1; ++l2)
                row_total += total.joint[joint_offset[k] +
                                         static_cast<std::size_t>(l) * nk1 + l2];
            if (row_total > 0) {
                for (int l2 = 0; l2 < nk1; ++l2)
                    pi(l, l2) = static_cast<double>(
                                    total.joint[joint_offset[k] +
                                                static_cast<std::size_t>(l) * nk1 + l2]) /
                                static_cast<double>(row_total);
            } else {
                // Source cell never visited: point mass on the nearest visited
                // point of the next layer, flagged for downstream consumers.
                mq.row_flagged[k][l] = 1;
                int best = -1;
                double best_d2 = 0.0;
                for (int l2 = 0; l2 < nk1; ++l2) {
                    if (total.marg[marg_offset[k + 1] + l2] == 0) continue;
                    double d2 = 0.0;
                    for (int cc = 0; cc < d; ++cc) {
                        const double t = mq.grids[k](l, cc) - mq.grids[k + 1](l2, cc);
                        d2 += t * t;
                    }
                    if (best < 0 || d2 < best_d2) {
                        best = l2;
                        best_d2 = d2;
                    }
                }
                if (best < 0) best = 0;  // next layer entirely unvisited
                pi.row(l).setZero();
                pi(l, best) = 1.0;
            }
        }
        mq.transitions[k] = std::move(pi);
    }
    return mq;
}

void save_marginal(const MarginalQuantization& mq, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_marginal: cannot open " + path);
    os << "MQ1\n" << mq.m << ' ' << mq.d << ' ' << mq.n_mc << ' ' << mq.seed << ' '
       << mq.h << "\n";
    char buf[64];
    for (int k = 0; k <= mq.m; ++k) {
        os << "layer " << k << ' ' << mq.size(k) << "\n";
        for (int l = 0; l < mq.size(k); ++l) {
            for (int c = 0; c < mq.d; ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g ", mq.grids[k](l, c));
                os << buf;
            }
            std::snprintf(buf, sizeof(buf), "%.17g\n", mq.weights[k][l]);
            os << buf;
        }
    }
    std::size_t nnz = 0;
    for (int k = 0; k < mq.m; ++k)
        for (int l = 0; l < mq.size(k); ++l)
            for (int l2 = 0; l2 < mq.size(k + 1); ++l2)
                if (mq.transitions[k](l, l2) != 0.0) ++nnz;
    os << "transitions " << nnz << "\n";
    for (int k = 0; k < mq.m; ++k)
        for (int l = 0; l < mq.size(k); ++l)
            for (int l2 = 0; l2 < mq.size(k + 1); ++l2)
                if (mq.transitions[k](l, l2) != 0.0) {
                    std::snprintf(buf, sizeof(buf), "%d %d %d %.17g\n", k, l, l2,
                                  mq.transitions[k](l, l2));
                    os << buf;
                }
    std::size_t nflag = 0;
    for (int k = 0; k < mq.m; ++k)
        for (int l = 0; l < mq.size(k); ++l)
            if (mq.row_flagged[k][l]) ++nflag;
    os << "flagged " << nflag << "\n";
    for (int k = 0; k < mq.m; ++k)
        for (int l = 0; l < mq.size(k); ++l)
            if (mq.row_flagged[k][l]) os << k << ' ' << l << "\n";
    if (!os) throw std::runtime_error("save_marginal: write failed for " + path);
}

MarginalQuantization load_marginal(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_marginal: cannot open " + path);
    std::string tok;
    if (!std::getline(is, tok) || tok != "MQ1")
        throw std::runtime_error("load_marginal: bad magic line (expected MQ1)");
    MarginalQuantization mq;
    is >> mq.m >> mq.d >> mq.n_mc >> mq.seed >> mq.h;
    if (!is || mq.m < 1 || mq.d < 1)
        throw std::runtime_error("load_marginal: malformed header");
    mq.grids.resize(mq.m + 1);
    mq.weights.resize(mq.m + 1);
    for (int k = 0; k <= mq.m; ++k) {
        int kk = -1, nk = 0;
        is >> tok >> kk >> nk;
        if (!is || tok != "layer" || kk != k || nk < 1)
            throw std::runtime_error("load_marginal: malformed layer header at k=" +
                                     std::to_string(k));
        mq.grids[k].resize(nk, mq.d);
        mq.weights[k].resize(nk);
        for (int l = 0; l < nk; ++l) {
            for (int c = 0; c < mq.d; ++c) is >> mq.grids[k](l, c);
            is >> mq.weights[k][l];
        }
        if (!is) throw std::runtime_error("load_marginal: truncated layer k=" +
                                          std::to_string(k));
        double wsum = 0.0;
        for (double w : mq.weights[k]) wsum += w;
        if (std::abs(wsum - 1.0) > 1e-10)
            throw std::runtime_error("load_marginal: layer weights sum to " +
                                     std::to_string(wsum));
    }
    std::size_t nnz = 0;
    is >> tok >> nnz;
    if (!is || tok != "transitions")
        throw std::runtime_error("load_marginal: missing transitions section");
    mq.transitions.resize(mq.m);
    for (int k = 0; k < mq.m; ++k)
        mq.transitions[k] = Mat::Zero(mq.size(k), mq.size(k + 1));
    for (std::size_t t = 0; t < nnz; ++t) {
        int k, l, l2;
        double p;
        is >> k >> l >> l2 >> p;
        if (!is || k < 0 || k >= mq.m || l < 0 || l >= mq.size(k) || l2 < 0 ||
            l2 >= mq.size(k + 1))
            throw std::runtime_error("load_marginal: bad transition triple");
        mq.transitions[k](l, l2) = p;
    }
    for (int k = 0; k < mq.m; ++k)
        for (int l = 0; l < mq.size(k); ++l) {
            const double rs = mq.transitions[k].row(l).sum();
            if (std::abs(rs - 1.0) > 1e-10)
                throw std::runtime_error("load_marginal: transition row sums to " +
                                         std::to_string(rs));
        }
    std::size_t nflag = 0;
    is >> tok >> nflag;
    if (!is || tok != "flagged")
        throw std::runtime_error("load_marginal: missing flagged section");
    mq.row_flagged.resize(mq.m);
    for (int k = 0; k < mq.m; ++k) mq.row_flagged[k].assign(mq.size(k), 0);
    for (std::size_t t = 0; t < nflag; ++t) {
        int k, l;
        is >> k >> l;
        if (!is || k < 0 || k >= mq.m || l < 0 || l >= mq.size(k))
            throw std::runtime_error("load_marginal: bad flagged row entry");
        mq.row_flagged[k][l] = 1;
    }
    return mq;
}

}  // namespace switchq
