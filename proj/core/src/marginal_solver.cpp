#include "switchq/marginal_solver.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "switchq/parallel.hpp"

namespace switchq {

QuantizedValueProcess tree_solve(const SwitchingModel& model,
                                 const MarginalQuantization& mq) {
    if (model.d != mq.d) throw std::invalid_argument("tree_solve: dimension mismatch");
    const int q = model.q;
    const int m = mq.m;
    const double h = mq.h;

    QuantizedValueProcess qv;
    qv.m = m;
    qv.q = q;
    qv.values.resize(m + 1);
    qv.policy.resize(m);

    qv.values[m].resize(mq.size(m), q);
    for (int l = 0; l < mq.size(m); ++l) {
        const Vec x = mq.grids[m].row(l).transpose();
        for (int i = 0; i < q; ++i) {
            const double g = model.terminal_gain(x, i);
            if (!std::isfinite(g))
                throw std::runtime_error("tree_solve: non-finite terminal gain at k=m l=" +
                                         std::to_string(l));
            qv.values[m](l, i) = g;
        }
    }

    for (int k = m - 1; k >= 0; --k) {
        const double tk = h * static_cast<double>(k);
        const int nk = mq.size(k);
        qv.values[k].resize(nk, q);
        qv.policy[k].resize(nk, q);
        const Mat& pi = mq.transitions[k];
        const Mat& vnext = qv.values[k + 1];

        // Continuation term per (l, j); independent of the current regime.
        Mat cont = pi * vnext;  // nk x q

        parallel_for(static_cast<std::size_t>(nk), [&](std::size_t lu) {
            const int l = static_cast<int>(lu);
            const Vec x = mq.grids[k].row(l).transpose();
            std::vector<double> Q(q);
            for (int j = 0; j < q; ++j) {
                const double f = model.running_profit(tk, x, j);
                const double c = cont(l, j);
                if (!std::isfinite(f) || !std::isfinite(c))
                    throw std::runtime_error("tree_solve: non-finite value at k=" +
                                             std::to_string(k) + " l=" + std::to_string(l) +
                                             " j=" + std::to_string(j));
                Q[j] = c + f * h;
            }
            for (int i = 0; i < q; ++i) {
                double best = -std::numeric_limits<double>::infinity();
                int bestj = 0;
                for (int j = 0; j < q; ++j) {
                    const double v = Q[j] - model.switch_cost(x, i, j);
                    if (v > best) {
                        best = v;
                        bestj = j;
                    }
                }
                qv.values[k](l, i) = best;
                qv.policy[k](l, i) = bestj;
            }
        });
    }

    qv.y0 = Vec(q);
    // Deterministic start: the root layer is the single point x0.
    for (int i = 0; i < q; ++i) qv.y0[i] = qv.values[0](0, i);
    return qv;
}

void write_tree_csv(const QuantizedValueProcess& qv, const MarginalQuantization& mq,
                    std::ostream& os) {
    os << "k,t_k,l";
    for (int c = 0; c < mq.d; ++c) os << ",x_" << (c + 1);
    os << ",regime,value,policy,flagged\n";
    char buf[64];
    for (int k = 0; k <= qv.m; ++k) {
        for (int l = 0; l < mq.size(k); ++l) {
            const int flagged = (k < qv.m && mq.row_flagged[k][l]) ? 1 : 0;
            for (int i = 0; i < qv.q; ++i) {
                std::snprintf(buf, sizeof(buf), "%d,%.17g,%d", k,
                              mq.h * static_cast<double>(k), l);
                os << buf;
                for (int c = 0; c < mq.d; ++c) {
                    std::snprintf(buf, sizeof(buf), ",%.17g", mq.grids[k](l, c));
                    os << buf;
                }
                const int pol = k < qv.m ? qv.policy[k](l, i) : i;
                std::snprintf(buf, sizeof(buf), ",%d,%.17g,%d,%d\n", i, qv.values[k](l, i),
                              pol, flagged);
                os << buf;
            }
        }
    }
}

}  // namespace switchq
