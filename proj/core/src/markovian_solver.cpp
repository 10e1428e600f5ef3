#include "switchq/markovian_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "switchq/parallel.hpp"
#include "switchq/rng.hpp"

namespace switchq {

namespace {

[[noreturn]] void non_finite(const char* what, int k, std::size_t node, int j, int l) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "solve_markovian: non-finite %s at k=%d node=%zu j=%d l=%d", what, k,
                  node, j, l);
    throw std::runtime_error(buf);
}

struct CoefCache {
    bool cached = false;
    int d = 1, q = 1;
    // cached mode
    std::vector<double> cbase;  // [node*q + j][d]         x + b_j(x) h
    std::vector<double> amat;   // [node*q + j][d*d]       sigma_j(x) sqrt(h)
    std::vector<double> cost;   // [node*q + i][q]         c_ij(x)
};

CoefCache build_cache(const SwitchingModel& model, const LatticeGrid& grid, double h,
                      std::size_t budget) {
    CoefCache cache;
    cache.d = model.d;
    cache.q = model.q;
    const std::size_t ns = grid.size();
    const std::size_t q = static_cast<std::size_t>(model.q);
    const std::size_t d = static_cast<std::size_t>(model.d);
    const std::size_t need = ns * q * (d + d * d + q);
    if (need > budget) return cache;

    cache.cached = true;
    cache.cbase.resize(ns * q * d);
    cache.amat.resize(ns * q * d * d);
    cache.cost.resize(ns * q * q);
    const double sqh = std::sqrt(h);
    parallel_for(ns, [&](std::size_t node) {
        const Vec x = grid.node(node);
        for (int j = 0; j < model.q; ++j) {
            const Vec b = model.drift(x, j);
            const Mat s = model.diffusion(x, j);
            if (!b.allFinite() || !s.allFinite()) non_finite("coefficient", -1, node, j, -1);
            const std::size_t slot = node * q + static_cast<std::size_t>(j);
            for (std::size_t c = 0; c < d; ++c)
                cache.cbase[slot * d + c] = x[static_cast<Eigen::Index>(c)] +
                                            b[static_cast<Eigen::Index>(c)] * h;
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    cache.amat[(slot * d + r) * d + c] =
                        s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * sqh;
        }
        for (int i = 0; i < model.q; ++i)
            for (int j = 0; j < model.q; ++j) {
                const double cij = model.switch_cost(x, i, j);
                if (!std::isfinite(cij)) non_finite("switch cost", -1, node, j, -1);
                cache.cost[(node * q + static_cast<std::size_t>(i)) * q +
                           static_cast<std::size_t>(j)] = cij;
            }
    });
    return cache;
}

}  // namespace

ValueSurface solve_markovian(const SwitchingModel& model, const LatticeGrid& grid,
                             const TimeGrid& tg, const GaussianQuantizer& gq,
                             std::size_t coef_cache_budget) {
    if (model.d != grid.dim() || model.d != gq.d)
        throw std::invalid_argument("solve_markovian: dimension mismatch");
    const int q = model.q;
    const int d = model.d;
    const int m = tg.m;
    const int N = gq.size();
    const std::size_t ns = grid.size();
    const double h = tg.h;
    const double sqh = std::sqrt(h);

    ValueSurface surf;
    surf.m = m;
    surf.q = q;
    surf.n_nodes = ns;
    surf.h = h;
    surf.horizon = tg.horizon;
    surf.values.resize(static_cast<std::size_t>(m + 1) * ns * q);
    surf.policy.resize(static_cast<std::size_t>(m) * ns * q);

    // Terminal layer v[m] = g.
    {
        double* vm = surf.values.data() + static_cast<std::size_t>(m) * ns * q;
        parallel_for(ns, [&](std::size_t node) {
            const Vec x = grid.node(node);
            for (int i = 0; i < q; ++i) {
                const double g = model.terminal_gain(x, i);
                if (!std::isfinite(g)) non_finite("terminal gain", m, node, i, -1);
                vm[node * q + i] = g;
            }
        });
    }

    const CoefCache cache = build_cache(model, grid, h, coef_cache_budget);

    // Quantizer data in flat arrays for the inner loop.
    std::vector<double> w1;
    if (d == 1) {
        w1.resize(N);
        for (int l = 0; l < N; ++l) w1[l] = gq.points(l, 0);
    }
    const std::vector<double>& pw = gq.weights;

    for (int k = m - 1; k >= 0; --k) {
        const double tk = tg.t(k);
        const double* vnext = surf.values.data() + static_cast<std::size_t>(k + 1) * ns * q;
        double* vcur = surf.values.data() + static_cast<std::size_t>(k) * ns * q;
        std::int32_t* pol = surf.policy.data() + static_cast<std::size_t>(k) * ns * q;

        parallel_for(ns, [&](std::size_t node) {
            double qbuf[64];
            std::vector<double> qdyn;
            double* Q = q <= 64 ? qbuf : (qdyn.resize(q), qdyn.data());
            const Vec x = grid.node(node);

            for (int j = 0; j < q; ++j) {
                double s = 0.0;
                if (d == 1) {
                    double c0, a0;
                    if (cache.cached) {
                        const std::size_t slot = node * q + static_cast<std::size_t>(j);
                        c0 = cache.cbase[slot];
                        a0 = cache.amat[slot];
                    } else {
                        const Vec b = model.drift(x, j);
                        const Mat sg = model.diffusion(x, j);
                        if (!b.allFinite() || !sg.allFinite())
                            non_finite("coefficient", k, node, j, -1);
                        c0 = x[0] + b[0] * h;
                        a0 = sg(0, 0) * sqh;
                    }
                    for (int l = 0; l < N; ++l) {
                        const std::size_t idx = grid.project1(c0 + a0 * w1[l]);
                        s += pw[l] * vnext[idx * q + j];
                    }
                } else {
                    Vec cb(d);
                    Mat A(d, d);
                    if (cache.cached) {
                        const std::size_t slot =
                            node * static_cast<std::size_t>(q) + static_cast<std::size_t>(j);
                        for (int c = 0; c < d; ++c)
                            cb[c] = cache.cbase[slot * d + static_cast<std::size_t>(c)];
                        for (int r = 0; r < d; ++r)
                            for (int c = 0; c < d; ++c)
                                A(r, c) = cache.amat[(slot * d + static_cast<std::size_t>(r)) * d +
                                                     static_cast<std::size_t>(c)];
                    } else {
                        const Vec b = model.drift(x, j);
                        const Mat sg = model.diffusion(x, j);
                        if (!b.allFinite() || !sg.allFinite())
                            non_finite("coefficient", k, node, j, -1);
                        cb = x + b * h;
                        A = sg * sqh;
                    }
                    Vec y(d);
                    for (int l = 0; l < N; ++l) {
                        y = cb;
                        y.noalias() += A * gq.points.row(l).transpose();
                        const std::size_t idx = grid.project_ptr(y.data());
                        s += pw[l] * vnext[idx * q + j];
                    }
                }
                const double f = model.running_profit(tk, x, j);
                if (!std::isfinite(f)) non_finite("running profit", k, node, j, -1);
                if (!std::isfinite(s)) {
                    // Identify the offending quantizer point for the diagnostic.
                    for (int l = 0; l < N; ++l) {
                        Vec y = x + model.drift(x, j) * h +
                                model.diffusion(x, j) * (sqh * gq.point(l));
                        const std::size_t idx = grid.project_ptr(y.data());
                        if (!std::isfinite(vnext[idx * q + j])) non_finite("value", k, node, j, l);
                    }
                    non_finite("value", k, node, j, -1);
                }
                Q[j] = s + f * h;
            }

            for (int i = 0; i < q; ++i) {
                double best = -std::numeric_limits<double>::infinity();
                int bestj = 0;
                for (int j = 0; j < q; ++j) {
                    const double cij =
                        cache.cached
                            ? cache.cost[(node * q + static_cast<std::size_t>(i)) * q +
                                         static_cast<std::size_t>(j)]
                            : model.switch_cost(x, i, j);
                    const double v = Q[j] - cij;
                    if (v > best) {
                        best = v;
                        bestj = j;
                    }
                }
                vcur[node * q + i] = best;
                pol[node * q + i] = bestj;
            }
        });
    }
    return surf;
}

double value_at(const ValueSurface& surface, const LatticeGrid& grid, int k, const Vec& x,
                int regime) {
    if (k < 0 || k > surface.m) throw std::out_of_range("value_at: time index out of range");
    if (regime < 0 || regime >= surface.q)
        throw std::out_of_range("value_at: regime out of range");
    return surface.value(k, grid.project(x), regime);
}

double evaluate_policy(const SwitchingModel& model, const ValueSurface& surface,
                       const LatticeGrid& grid, const GaussianQuantizer& gq, const Vec& x0,
                       int regime0, std::size_t n_paths, std::uint64_t seed,
                       PolicySimulation mode) {
    const int m = surface.m;
    const int d = model.d;
    const double h = surface.h;
    const double sqh = std::sqrt(h);

    std::vector<double> cumw(gq.size());
    double acc = 0.0;
    for (int l = 0; l < gq.size(); ++l) {
        acc += gq.weights[l];
        cumw[l] = acc;
    }
    cumw.back() = 1.0 + 1e-16;

    constexpr std::size_t kGrain = 4096;
    std::vector<double> partial(chunk_count(n_paths, kGrain), 0.0);
    parallel_chunks(n_paths, kGrain, [&](std::size_t c, std::size_t pb, std::size_t pe) {
        double sum = 0.0;
        Vec shock(d);
        for (std::size_t p = pb; p < pe; ++p) {
            Rng rng = stream_rng(seed, p);
            int regime = regime0;
            double reward = 0.0;
            if (mode == PolicySimulation::quantized_chain) {
                std::size_t node = grid.project(x0);
                for (int k = 0; k < m; ++k) {
                    const Vec x = grid.node(node);
                    const int j = surface.policy_at(k, node, regime);
                    if (j != regime) reward -= model.switch_cost(x, regime, j);
                    reward += model.running_profit(k * h, x, j) * h;
                    const double u = rng.uniform01();
                    const int l = static_cast<int>(
                        std::lower_bound(cumw.begin(), cumw.end(), u) - cumw.begin());
                    const Vec y = x + model.drift(x, j) * h +
                                  model.diffusion(x, j) * (sqh * gq.point(l));
                    node = grid.project(y);
                    regime = j;
                }
                reward += model.terminal_gain(grid.node(node), regime);
            } else {
                Vec x = x0;
                for (int k = 0; k < m; ++k) {
                    const std::size_t node = grid.project(x);
                    const int j = surface.policy_at(k, node, regime);
                    if (j != regime) reward -= model.switch_cost(x, regime, j);
                    reward += model.running_profit(k * h, x, j) * h;
                    for (int cc = 0; cc < d; ++cc) shock[cc] = rng.normal();
                    x = x + model.drift(x, j) * h + model.diffusion(x, j) * (sqh * shock);
                    regime = j;
                }
                reward += model.terminal_gain(x, regime);
            }
            sum += reward;
        }
        partial[c] = sum;
    });
    double total = 0.0;
    for (double s : partial) total += s;
    return total / static_cast<double>(n_paths);
}

void write_surface_csv(const ValueSurface& surface, const LatticeGrid& grid,
                       std::ostream& os) {
    os << "k,t_k";
    for (int c = 0; c < grid.dim(); ++c) os << ",x_" << (c + 1);
    os << ",regime,value,policy\n";
    char buf[64];
    for (int k = 0; k <= surface.m; ++k) {
        const double tk = k == surface.m ? surface.horizon : k * surface.h;
        for (std::size_t node = 0; node < surface.n_nodes; ++node) {
            for (int i = 0; i < surface.q; ++i) {
                std::snprintf(buf, sizeof(buf), "%d,%.17g", k, tk);
                os << buf;
                for (int c = 0; c < grid.dim(); ++c) {
                    std::snprintf(buf, sizeof(buf), ",%.17g", grid.node_ptr(node)[c]);
                    os << buf;
                }
                const int pol = k < surface.m ? surface.policy_at(k, node, i) : i;
                std::snprintf(buf, sizeof(buf), ",%d,%.17g,%d\n", i,
                              surface.value(k, node, i), pol);
                os << buf;
            }
        }
    }
}

}  // namespace switchq
