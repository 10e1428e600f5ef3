#pragma once

#include <utility>

#include "switchq/model.hpp"

namespace switchq {

// Two-regime switching on a geometric Brownian motion, profits
// f_i(t, x) = e^{-beta t} k_i x^{gamma_i} and constant costs. The terminal
// gain of the finite-horizon benchmark is the discounted infinite-horizon
// value, which this module solves in closed form.
struct GBMSwitchParams {
    double b = 0.0;
    double sigma = 1.0;
    double beta = 1.0;
    double k1 = 2.0;
    double k2 = 1.0;
    double gamma1 = 1.0 / 3.0;
    double gamma2 = 2.0 / 3.0;
    double c12 = 0.5;
    double c21 = 0.5;
    double x0 = 3.0;
    double horizon = 1.0;

    void validate() const;  // throws on divergent perpetuities etc.
};

// Piecewise infinite-horizon value functions
//   v1(x) = A1 x^{m+} + K1 k1 x^{g1}            for x < x1_low
//         = B2 x^{m-} + K2 k2 x^{g2} - c12      for x >= x1_low
//   v2(x) = A2 x^{m+} + K2 k2 x^{g2}            for x < x2_low
//         = A1 x^{m+} + K1 k1 x^{g1} - c21      for x2_low <= x <= x2_high
//         = B2 x^{m-} + K2 k2 x^{g2}            for x > x2_high,
// extended by zero to x <= 0 (both branches vanish at 0+). The free constants
// and boundaries come from C0/C1 matching at the three boundaries.
struct ClosedFormSolution {
    GBMSwitchParams params;
    double m_plus = 0.0, m_minus = 0.0;
    double K1 = 0.0, K2 = 0.0;
    double A1 = 0.0, A2 = 0.0, B2 = 0.0;
    double x1_low = 0.0;   // switch boundary of regime 1
    double x2_low = 0.0;   // lower switch boundary of regime 2
    double x2_high = 0.0;  // upper switch boundary of regime 2
    double max_residual = 0.0;  // largest scaled smooth-fit residual

    double v1(double x) const;
    double v2(double x) const;
    double value(double x, int regime) const { return regime == 0 ? v1(x) : v2(x); }
};

// Real roots of (1/2) sigma^2 m (m - 1) + b m - beta = 0, returned as
// (m_plus, m_minus) with m_minus < 0 < m_plus.
std::pair<double, double> characteristic_roots(double b, double sigma, double beta);

// Perpetuity constant: K k x^gamma solves the pricing ODE with flow k x^gamma,
// K = 1 / (beta - b gamma - (1/2) sigma^2 gamma (gamma - 1)). Throws when the
// denominator is not positive.
double profit_constant(double b, double sigma, double beta, double gamma);

// Solves the six smooth-pasting equations by damped Newton iteration with a
// multi-start policy; every scaled residual of the returned solution is below
// 1e-9 and the result passes the obstacle screen on a log-spaced sample.
ClosedFormSolution solve_closed_form(const GBMSwitchParams& params);

// Finite-horizon model: d = 1, q = 2, drift b x, diffusion sigma x,
// f_i(t, x) = e^{-beta t} k_i x^{gamma_i} (zero for x <= 0) and terminal gain
// g_i(x) = e^{-beta T} v_i(x).
SwitchingModel build_finite_horizon_model(const GBMSwitchParams& params,
                                          const ClosedFormSolution& solution);

}  // namespace switchq
