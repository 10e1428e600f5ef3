#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "support/test_models.hpp"
#include "switchq/closed_form_gbm.hpp"
#include "switchq/lattice.hpp"
#include "switchq/markovian_solver.hpp"

using namespace switchq;

TEST_CASE("characteristic roots: benchmark parameters give (2, -1)") {
    const auto [mp, mm] = characteristic_roots(0.0, 1.0, 1.0);
    CHECK(mp == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(mm == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("characteristic roots: sigma = sqrt(2) gives the golden-ratio pair") {
    const auto [mp, mm] = characteristic_roots(0.0, std::sqrt(2.0), 1.0);
    CHECK(mp == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-12));
    CHECK(mm == doctest::Approx((1.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-12));
}

TEST_CASE("characteristic roots: quadratic identity and sign structure") {
    for (double b : {-0.2, 0.0, 0.3}) {
        for (double sigma : {0.5, 1.0, 1.7}) {
            const double beta = 0.8;
            const auto [mp, mm] = characteristic_roots(b, sigma, beta);
            for (double m : {mp, mm})
                CHECK(std::abs(0.5 * sigma * sigma * m * (m - 1.0) + b * m - beta) <= 1e-12);
            CHECK(mp > 1.0);
            CHECK(mm < 0.0);
            CHECK(mp * mm == doctest::Approx(-2.0 * beta / (sigma * sigma)).epsilon(1e-12));
        }
    }
}

TEST_CASE("profit constant: both benchmark exponents give 0.9") {
    CHECK(profit_constant(0.0, 1.0, 1.0, 1.0 / 3.0) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(profit_constant(0.0, 1.0, 1.0, 2.0 / 3.0) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(profit_constant(0.0, 1.0, 2.0, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(profit_constant(2.0, 0.1, 0.1, 0.9), std::invalid_argument);
}

TEST_CASE("profit constant matches the Monte-Carlo perpetuity oracle") {
    const double K = profit_constant(0.0, 1.0, 1.0, 1.0 / 3.0);
    const auto est = oracle::gbm_power_perpetuity(0.0, 1.0, 1.0, 1.0 / 3.0, 20'000, 404);
    CHECK(std::abs(est.mean - K) <= 3.0 * est.se + 2e-3);  // small trapezoid bias
}

TEST_CASE("closed form: benchmark value, boundaries and residuals") {
    GBMSwitchParams params;
    const auto sol = solve_closed_form(params);
    CHECK(sol.max_residual <= 1e-9);
    CHECK(sol.v2(3.0) == doctest::Approx(2.1285).epsilon(2.5e-4));  // reference value to 4 digits
    CHECK(sol.x2_low > 0.0);
    CHECK(sol.x2_low <= sol.x2_high);
    CHECK(sol.x2_high <= sol.x1_low);
}

TEST_CASE("closed form: continuity and smooth fit at the boundaries") {
    GBMSwitchParams params;
    const auto sol = solve_closed_form(params);
    const double eps = 1e-7;
    for (double x : {sol.x1_low}) {
        CHECK(sol.v1(x - eps) == doctest::Approx(sol.v1(x + eps)).epsilon(1e-5));
        const double dl = (sol.v1(x) - sol.v1(x - eps)) / eps;
        const double dr = (sol.v1(x + eps) - sol.v1(x)) / eps;
        CHECK(dl == doctest::Approx(dr).epsilon(1e-4));
    }
    for (double x : {sol.x2_low, sol.x2_high}) {
        CHECK(sol.v2(x - eps) == doctest::Approx(sol.v2(x + eps)).epsilon(1e-5));
        const double dl = (sol.v2(x) - sol.v2(x - eps)) / eps;
        const double dr = (sol.v2(x + eps) - sol.v2(x)) / eps;
        CHECK(dl == doctest::Approx(dr).epsilon(1e-4));
    }
}

TEST_CASE("closed form: obstacle inequalities on a dense log-spaced sample") {
    GBMSwitchParams params;
    const auto sol = solve_closed_form(params);
    const int n = 10'000;
    const double lo = std::log(1e-3), hi = std::log(10.0 * params.x0);
    double worst = 1e300;
    for (int i = 0; i < n; ++i) {
        const double x = std::exp(lo + (hi - lo) * (i + 0.5) / n);
        worst = std::min(worst, sol.v1(x) - (sol.v2(x) - params.c12));
        worst = std::min(worst, sol.v2(x) - (sol.v1(x) - params.c21));
    }
    CHECK(worst >= -1e-9);
}

TEST_CASE("finite-horizon model passes validation and matches the flow scale") {
    GBMSwitchParams params;
    const auto sol = solve_closed_form(params);
    const auto model = build_finite_horizon_model(params, sol);
    CHECK(model.running_profit(0.0, Vec::Constant(1, 1.0), 0) == doctest::Approx(2.0));
    CHECK(model.running_profit(0.0, Vec::Constant(1, 1.0), 1) == doctest::Approx(1.0));

    const auto samples = testmodels::linspace_points(0.1, 30.0, 600);
    CHECK(validate_costs(model, samples).passed);
    CHECK(validate_terminal(model, samples).passed);
}

TEST_CASE("value at (0, x0) is horizon-independent by construction of g") {
    GBMSwitchParams p_half;
    p_half.horizon = 0.5;
    GBMSwitchParams p_one;
    p_one.horizon = 1.0;
    const auto sol_half = solve_closed_form(p_half);
    const auto sol_one = solve_closed_form(p_one);
    const auto gq = build_gaussian_quantizer(1, 100, QuantMethod::lloyd_mc, 100'000, 100, 5);
    const auto grid = LatticeGrid::build(1, 1.0 / 20.0, 30.0);
    const auto v_half =
        solve_markovian(build_finite_horizon_model(p_half, sol_half), grid,
                        TimeGrid::make(0.5, 25), gq);
    const auto v_one = solve_markovian(build_finite_horizon_model(p_one, sol_one), grid,
                                       TimeGrid::make(1.0, 50), gq);
    const Vec x0 = Vec::Constant(1, 3.0);
    const double a = value_at(v_half, grid, 0, x0, 1);
    const double b = value_at(v_one, grid, 0, x0, 1);
    CHECK(a == doctest::Approx(b).epsilon(0.02));  // same h, scheme error only
}

TEST_CASE("benchmark policy reward tracks the solved value within 2%") {
    GBMSwitchParams params;
    const auto sol = solve_closed_form(params);
    const auto model = build_finite_horizon_model(params, sol);
    const auto grid = LatticeGrid::build(1, 1.0 / 50.0, 30.0);
    const auto tg = TimeGrid::make(1.0, 50);
    const auto gq = build_gaussian_quantizer(1, 200, QuantMethod::lloyd_mc, 200'000, 150, 3);
    const auto surf = solve_markovian(model, grid, tg, gq);
    const Vec x0 = Vec::Constant(1, 3.0);
    const double solved = value_at(surf, grid, 0, x0, 1);
    const double reward = evaluate_policy(model, surf, grid, gq, x0, 1, 400'000, 777,
                                          PolicySimulation::euler_chain);
    CHECK(std::abs(reward - solved) <= 0.02 * std::abs(solved));
}

TEST_CASE("parameter validation rejects bad inputs") {
    GBMSwitchParams p;
    p.sigma = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = GBMSwitchParams{};
    p.c12 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = GBMSwitchParams{};
    p.gamma1 = 1.2;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = GBMSwitchParams{};
    p.b = 2.0;  // beta too small for the perpetuity
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
