#pragma once

// Independent reference computations for the test suites: quadrature,
// exhaustive tree enumeration for both schemes, Gaussian cell probabilities
// and an exact-GBM perpetuity sampler. Nothing here calls the solver code
// paths it is used to check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "switchq/gaussian_quantizer.hpp"
#include "switchq/lattice.hpp"
#include "switchq/marginal_quantization.hpp"
#include "switchq/model.hpp"
#include "switchq/rng.hpp"

namespace oracle {

using switchq::Vec;

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int panels) {
    if (panels % 2 == 1) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// E[theta | theta > 0] of a standard normal, by quadrature.
inline double half_normal_mean() {
    const double num = simpson([](double x) { return x * normal_pdf(x); }, 0.0, 12.0, 4000);
    const double den = simpson([](double x) { return normal_pdf(x); }, 0.0, 12.0, 4000);
    return num / den;
}

// Expected reward of the single-regime lattice chain by exhaustive recursion
// over all shock sequences (N^m leaves); no layer arrays, no max.
inline double lattice_chain_value(const switchq::SwitchingModel& model,
                                  const switchq::LatticeGrid& grid,
                                  const switchq::TimeGrid& tg,
                                  const switchq::GaussianQuantizer& gq,
                                  std::size_t node, int k) {
    const Vec x = grid.node(node);
    if (k == tg.m) return model.terminal_gain(x, 0);
    double acc = model.running_profit(tg.t(k), x, 0) * tg.h;
    const double sqh = std::sqrt(tg.h);
    double expect = 0.0;
    for (int l = 0; l < gq.size(); ++l) {
        const Vec y =
            x + model.drift(x, 0) * tg.h + model.diffusion(x, 0) * (sqh * gq.point(l));
        expect += gq.weights[l] * lattice_chain_value(model, grid, tg, gq, grid.project(y), k + 1);
    }
    return acc + expect;
}

// Expected reward of the single-regime quantization tree by exhaustive path
// enumeration over the transition matrices.
inline double tree_chain_value(const switchq::SwitchingModel& model,
                               const switchq::MarginalQuantization& mq, int k, int cell) {
    const Vec x = mq.grids[k].row(cell).transpose();
    if (k == mq.m) return model.terminal_gain(x, 0);
    double acc = model.running_profit(mq.h * k, x, 0) * mq.h;
    double expect = 0.0;
    for (int l2 = 0; l2 < mq.size(k + 1); ++l2) {
        const double p = mq.transitions[k](cell, l2);
        if (p == 0.0) continue;
        expect += p * tree_chain_value(model, mq, k + 1, l2);
    }
    return acc + expect;
}

// One-step GBM-Euler transition probability into [c, e] from state x:
// X' = x + x sqrt(h) theta ~ N(x, x^2 h).
inline double gbm_euler_cell_prob(double x, double h, double c, double e) {
    const double sd = std::abs(x) * std::sqrt(h);
    if (sd == 0.0) return (c <= x && x <= e) ? 1.0 : 0.0;
    return normal_cdf((e - x) / sd) - normal_cdf((c - x) / sd);
}

// Transition probability between Voronoi cells of a two-step GBM-Euler chain
// started at x0 (b = 0, sigma = 1):
//   P[X2 in [c, e] | X1 in [a, b]]
// with X1 ~ N(x0, x0^2 h), by quadrature over the source cell.
inline double gbm_two_step_transition(double x0, double h, double a, double b, double c,
                                      double e) {
    const double sd = x0 * std::sqrt(h);
    const double lo = std::max(a, x0 - 12.0 * sd);
    const double hi = std::min(b, x0 + 12.0 * sd);
    if (!(hi > lo)) return 0.0;
    auto dens = [&](double x) { return normal_pdf((x - x0) / sd) / sd; };
    const double num = simpson(
        [&](double x) { return dens(x) * gbm_euler_cell_prob(x, h, c, e); }, lo, hi, 4000);
    const double den = simpson(dens, lo, hi, 4000);
    return num / den;
}

// Monte-Carlo value of the discounted power perpetuity
//   E[ int_0^inf e^{-beta t} X_t^gamma dt ],  X exact GBM from x0 = 1,
// truncated at t = 30 and integrated with the trapezoid rule.
struct PerpetuityEstimate {
    double mean = 0.0;
    double se = 0.0;
};

inline PerpetuityEstimate gbm_power_perpetuity(double b, double sigma, double beta,
                                               double gamma, std::size_t n_paths,
                                               std::uint64_t seed) {
    const double T = 30.0, dt = 0.01;
    const int steps = static_cast<int>(T / dt);
    const double drift = (b - 0.5 * sigma * sigma) * dt;
    const double vol = sigma * std::sqrt(dt);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        switchq::Rng rng = switchq::stream_rng(seed, p);
        double logx = 0.0;
        double integral = 0.5 * dt;  // f(0) = 1 at x0 = 1, trapezoid end
        for (int k = 1; k <= steps; ++k) {
            logx += drift + vol * rng.normal();
            const double f = std::exp(-beta * k * dt + gamma * logx);
            integral += (k == steps ? 0.5 : 1.0) * f * dt;
        }
        sum += integral;
        sumsq += integral * integral;
    }
    PerpetuityEstimate est;
    const double n = static_cast<double>(n_paths);
    est.mean = sum / n;
    est.se = std::sqrt(std::max(0.0, sumsq / n - est.mean * est.mean) / n);
    return est;
}

}  // namespace oracle
