#include "switchq/closed_form_gbm.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace switchq {

namespace {

double pos_pow(double x, double p) { return x > 0.0 ? std::pow(x, p) : 0.0; }

// Unknowns u = (A1, A2, B2, log a, log b, log c) with boundaries
// a = x1_low, b = x2_low, c = x2_high. Residuals are the C0/C1 mismatches of
// the adjacent branches, scaled by the magnitude of the matched terms.
struct PastingSystem {
    double mp, mm, P1, P2, g1, g2, c12, c21;  // P_i = K_i k_i

    // Branch values and derivatives.
    double lo1(double A1, double x) const { return A1 * std::pow(x, mp) + P1 * std::pow(x, g1); }
    double dlo1(double A1, double x) const {
        return mp * A1 * std::pow(x, mp - 1.0) + g1 * P1 * std::pow(x, g1 - 1.0);
    }
    double lo2(double A2, double x) const { return A2 * std::pow(x, mp) + P2 * std::pow(x, g2); }
    double dlo2(double A2, double x) const {
        return mp * A2 * std::pow(x, mp - 1.0) + g2 * P2 * std::pow(x, g2 - 1.0);
    }
    double hi2(double B2, double x) const { return B2 * std::pow(x, mm) + P2 * std::pow(x, g2); }
    double dhi2(double B2, double x) const {
        return mm * B2 * std::pow(x, mm - 1.0) + g2 * P2 * std::pow(x, g2 - 1.0);
    }

    Eigen::Matrix<double, 6, 1> residual(const Eigen::Matrix<double, 6, 1>& u) const {
        const double A1 = u[0], A2 = u[1], B2 = u[2];
        const double a = std::exp(u[3]), b = std::exp(u[4]), c = std::exp(u[5]);
        Eigen::Matrix<double, 6, 1> r;
        auto scaled = [](double lhs, double rhs) {
            return (lhs - rhs) / (1.0 + std::abs(lhs) + std::abs(rhs));
        };
        r[0] = scaled(lo1(A1, a), hi2(B2, a) - c12);
        r[1] = scaled(dlo1(A1, a), dhi2(B2, a));
        r[2] = scaled(lo2(A2, b), lo1(A1, b) - c21);
        r[3] = scaled(dlo2(A2, b), dlo1(A1, b));
        r[4] = scaled(lo1(A1, c) - c21, hi2(B2, c));
        r[5] = scaled(dlo1(A1, c), dhi2(B2, c));
        return r;
    }

    // Value-matching equations are linear in (A1, A2, B2) once the boundaries
    // are fixed; solving them gives the Newton start.
    Eigen::Vector3d linear_start(double a, double b, double c) const {
        Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
        Eigen::Vector3d rhs;
        M(0, 0) = std::pow(a, mp);
        M(0, 2) = -std::pow(a, mm);
        rhs[0] = P2 * std::pow(a, g2) - c12 - P1 * std::pow(a, g1);
        M(1, 0) = -std::pow(b, mp);
        M(1, 1) = std::pow(b, mp);
        rhs[1] = P1 * std::pow(b, g1) - c21 - P2 * std::pow(b, g2);
        M(2, 0) = std::pow(c, mp);
        M(2, 2) = -std::pow(c, mm);
        rhs[2] = P2 * std::pow(c, g2) + c21 - P1 * std::pow(c, g1);
        return M.fullPivLu().solve(rhs);
    }
};

bool newton_solve(const PastingSystem& sys, Eigen::Matrix<double, 6, 1>& u,
                  double tol, int max_iters) {
    using V6 = Eigen::Matrix<double, 6, 1>;
    using M6 = Eigen::Matrix<double, 6, 6>;
    V6 r = sys.residual(u);
    double norm = r.norm();
    for (int it = 0; it < max_iters; ++it) {
        if (!std::isfinite(norm)) return false;
        if (r.cwiseAbs().maxCoeff() < tol) return true;
        M6 J;
        for (int c = 0; c < 6; ++c) {
            const double hstep = 1e-7 * std::max(1.0, std::abs(u[c]));
            V6 up = u, um = u;
            up[c] += hstep;
            um[c] -= hstep;
            J.col(c) = (sys.residual(up) - sys.residual(um)) / (2.0 * hstep);
        }
        const V6 step = J.fullPivLu().solve(-r);
        if (!step.allFinite()) return false;
        double lambda = 1.0;
        bool accepted = false;
        while (lambda > 1e-6) {
            const V6 cand = u + lambda * step;
            const V6 rc = sys.residual(cand);
            const double nc = rc.norm();
            if (std::isfinite(nc) && nc < (1.0 - 0.25 * lambda) * norm + 1e-300) {
                u = cand;
                r = rc;
                norm = nc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) return false;
    }
    return sys.residual(u).cwiseAbs().maxCoeff() < tol;
}

}  // namespace

void GBMSwitchParams::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("GBMSwitchParams: sigma must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("GBMSwitchParams: beta must be > 0");
    if (!(c12 > 0.0) || !(c21 > 0.0))
        throw std::invalid_argument("GBMSwitchParams: costs must be > 0");
    if (!(gamma1 > 0.0 && gamma1 < 1.0 && gamma2 > 0.0 && gamma2 < 1.0))
        throw std::invalid_argument("GBMSwitchParams: gamma_i must lie in (0, 1)");
    for (double g : {gamma1, gamma2}) {
        if (!(beta - b * g - 0.5 * sigma * sigma * g * (g - 1.0) > 0.0))
            throw std::invalid_argument("GBMSwitchParams: divergent perpetuity (K_i)");
    }
    if (!(x0 > 0.0)) throw std::invalid_argument("GBMSwitchParams: x0 must be > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("GBMSwitchParams: horizon must be > 0");
}

std::pair<double, double> characteristic_roots(double b, double sigma, double beta) {
    if (!(sigma > 0.0)) throw std::invalid_argument("characteristic_roots: sigma must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("characteristic_roots: beta must be > 0");
    // (1/2) s^2 m^2 + (b - s^2/2) m - beta = 0.
    const double s2 = 0.5 * sigma * sigma;
    const double p = b - s2;
    const double disc = std::sqrt(p * p + 4.0 * s2 * beta);
    const double m_plus = (-p + disc) / (2.0 * s2);
    const double m_minus = (-p - disc) / (2.0 * s2);
    return {m_plus, m_minus};
}

double profit_constant(double b, double sigma, double beta, double gamma) {
    const double den = beta - b * gamma - 0.5 * sigma * sigma * gamma * (gamma - 1.0);
    if (!(den > 0.0))
        throw std::invalid_argument("profit_constant: divergent perpetuity (denominator <= 0)");
    return 1.0 / den;
}

double ClosedFormSolution::v1(double x) const {
    if (x <= 0.0) return 0.0;
    const double P1 = K1 * params.k1, P2 = K2 * params.k2;
    if (x < x1_low) return A1 * std::pow(x, m_plus) + P1 * pos_pow(x, params.gamma1);
    return B2 * std::pow(x, m_minus) + P2 * pos_pow(x, params.gamma2) - params.c12;
}

double ClosedFormSolution::v2(double x) const {
    if (x <= 0.0) return 0.0;
    const double P1 = K1 * params.k1, P2 = K2 * params.k2;
    if (x < x2_low) return A2 * std::pow(x, m_plus) + P2 * pos_pow(x, params.gamma2);
    if (x <= x2_high) return A1 * std::pow(x, m_plus) + P1 * pos_pow(x, params.gamma1) - params.c21;
    return B2 * std::pow(x, m_minus) + P2 * pos_pow(x, params.gamma2);
}

ClosedFormSolution solve_closed_form(const GBMSwitchParams& params) {
    params.validate();

    ClosedFormSolution sol;
    sol.params = params;
    const auto [mp, mm] = characteristic_roots(params.b, params.sigma, params.beta);
    sol.m_plus = mp;
    sol.m_minus = mm;
    sol.K1 = profit_constant(params.b, params.sigma, params.beta, params.gamma1);
    sol.K2 = profit_constant(params.b, params.sigma, params.beta, params.gamma2);

    PastingSystem sys{mp,          mm,          sol.K1 * params.k1, sol.K2 * params.k2,
                      params.gamma1, params.gamma2, params.c12,        params.c21};

    // Obstacle screen on a log-spaced sample of (0, 10 x0].
    auto obstacle_ok = [&](const ClosedFormSolution& s) {
        const int n = 2000;
        const double lo = std::log(1e-3 * params.x0), hi = std::log(10.0 * params.x0);
        for (int i = 0; i < n; ++i) {
            const double x = std::exp(lo + (hi - lo) * (i + 0.5) / n);
            if (s.v1(x) - (s.v2(x) - params.c12) < -1e-9) return false;
            if (s.v2(x) - (s.v1(x) - params.c21) < -1e-9) return false;
        }
        return true;
    };

    // The profit flows cross where k1 x^{g1} = k2 x^{g2}; boundaries sit
    // around that scale. Multi-start over a log lattice anchored there.
    double x_cross = params.x0;
    if (params.gamma1 != params.gamma2)
        x_cross = std::pow(params.k1 / params.k2, 1.0 / (params.gamma2 - params.gamma1));

    const std::vector<double> b_mults = {0.05, 0.15, 0.3, 0.6};
    const std::vector<double> c_mults = {0.5, 1.0, 2.0, 4.0};
    const std::vector<double> a_mults = {1.0, 2.0, 4.0, 8.0};
    for (double bm : b_mults) {
        for (double cm : c_mults) {
            for (double am : a_mults) {
                const double b0 = bm * x_cross;
                const double c0 = cm * x_cross;
                const double a0 = am * x_cross;
                if (!(b0 < c0)) continue;
                Eigen::Vector3d lin = sys.linear_start(a0, b0, c0);
                if (!lin.allFinite()) continue;
                Eigen::Matrix<double, 6, 1> u;
                u << lin[0], lin[1], lin[2], std::log(a0), std::log(b0), std::log(c0);
                if (!newton_solve(sys, u, 1e-11, 80)) continue;
                ClosedFormSolution cand = sol;
                cand.A1 = u[0];
                cand.A2 = u[1];
                cand.B2 = u[2];
                cand.x1_low = std::exp(u[3]);
                cand.x2_low = std::exp(u[4]);
                cand.x2_high = std::exp(u[5]);
                cand.max_residual = sys.residual(u).cwiseAbs().maxCoeff();
                if (!(cand.x2_low > 0.0 && cand.x2_low <= cand.x2_high)) continue;
                if (!obstacle_ok(cand)) continue;
                return cand;
            }
        }
    }
    throw std::runtime_error(
        "solve_closed_form: no admissible smooth-pasting root found (multi-start exhausted)");
}

SwitchingModel build_finite_horizon_model(const GBMSwitchParams& params,
                                          const ClosedFormSolution& solution) {
    params.validate();
    SwitchingModel model;
    model.d = 1;
    model.q = 2;
    model.horizon = params.horizon;
    const double b = params.b, sigma = params.sigma, beta = params.beta;
    const double k[2] = {params.k1, params.k2};
    const double g[2] = {params.gamma1, params.gamma2};
    const double cost[2][2] = {{0.0, params.c12}, {params.c21, 0.0}};
    const double discT = std::exp(-beta * params.horizon);
    ClosedFormSolution sol = solution;

    model.drift = [b](const Vec& x, int) { return Vec::Constant(1, b * x[0]); };
    model.diffusion = [sigma](const Vec& x, int) { return Mat::Constant(1, 1, sigma * x[0]); };
    model.running_profit = [beta, k, g](double t, const Vec& x, int i) {
        return std::exp(-beta * t) * k[i] * pos_pow(x[0], g[i]);
    };
    model.terminal_gain = [discT, sol](const Vec& x, int i) {
        return discT * sol.value(x[0], i);
    };
    model.switch_cost = [cost](const Vec&, int i, int j) { return cost[i][j]; };
    return model;
}

}  // namespace switchq
