#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support/test_models.hpp"
#include "switchq/euler.hpp"
#include "switchq/parallel.hpp"

using namespace switchq;

TEST_CASE("euler_step: zero shock gives the drift move") {
    const auto m = testmodels::gbm_single(0.1, 0.5);
    const Vec x = Vec::Constant(1, 2.0);
    const Vec y = euler_step(m, x, 0, 0.25, Vec::Zero(1));
    CHECK(y[0] == doctest::Approx(2.0 + 0.1 * 2.0 * 0.25).epsilon(1e-15));
}

TEST_CASE("euler_step: GBM substitution x=3, h=0.01, shock=1") {
    const auto m = testmodels::gbm_single(0.0, 1.0);
    const Vec y = euler_step(m, Vec::Constant(1, 3.0), 0, 0.01, Vec::Constant(1, 1.0));
    CHECK(y[0] == doctest::Approx(3.3).epsilon(1e-14));
}

TEST_CASE("euler_step is affine in the shock") {
    const auto m = testmodels::gbm_single(0.2, 0.7);
    const Vec x = Vec::Constant(1, 1.5);
    const double h = 0.1;
    const Vec u = Vec::Constant(1, 0.3), v = Vec::Constant(1, -1.1);
    const double a = 0.25, b = 1.75;
    const Vec lhs = euler_step(m, x, 0, h, a * u + b * v);
    const Vec base = euler_step(m, x, 0, h, Vec::Zero(1));
    const Vec du = euler_step(m, x, 0, h, u) - base;
    const Vec dv = euler_step(m, x, 0, h, v) - base;
    CHECK(lhs[0] == doctest::Approx((base + a * du + b * dv)[0]).epsilon(1e-12));
}

TEST_CASE("euler_step rejects nonpositive h") {
    const auto m = testmodels::gbm_single(0.0, 1.0);
    CHECK_THROWS_AS(euler_step(m, Vec::Zero(1), 0, 0.0, Vec::Zero(1)),
                    std::invalid_argument);
}

TEST_CASE("simulate_uncontrolled: degenerate dynamics stay at x0") {
    const auto m = testmodels::gbm_single(0.0, 0.0);
    const auto tg = TimeGrid::make(1.0, 4);
    const auto bundle = simulate_uncontrolled(m, Vec::Constant(1, 3.0), tg, 17, 7);
    for (std::size_t p = 0; p < bundle.n_paths; ++p)
        for (int k = 0; k <= bundle.m; ++k) CHECK(bundle.coord(p, k, 0) == 3.0);
}

TEST_CASE("simulate_uncontrolled rejects regime-dependent coefficients") {
    SwitchingModel m = testmodels::gbm_single(0.0, 1.0);
    m.q = 2;
    m.drift = [](const Vec& x, int i) { return Vec::Constant(1, i == 0 ? 0.0 : x[0]); };
    CHECK_THROWS_AS(
        simulate_uncontrolled(m, Vec::Constant(1, 1.0), TimeGrid::make(1.0, 2), 4, 1),
        std::invalid_argument);
}

TEST_CASE("simulate_uncontrolled: martingale mean and exact second moment") {
    const auto m = testmodels::gbm_single(0.0, 1.0);
    const int steps = 8;
    const auto tg = TimeGrid::make(1.0, steps);
    const std::size_t n = 1'000'000;
    const auto bundle = simulate_uncontrolled(m, Vec::Constant(1, 3.0), tg, n, 2024);

    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double xT = bundle.coord(p, steps, 0);
        s1 += xT;
        s2 += xT * xT;
        s4 += xT * xT * xT * xT;
    }
    const double mean = s1 / n;
    const double mom2 = s2 / n;
    const double se_mean = std::sqrt(std::max(0.0, mom2 - mean * mean) / n);
    // E X_T = 3 (driftless chain is a martingale).
    CHECK(std::abs(mean - 3.0) <= 3.0 * se_mean);
    // E X_k^2 = (1 + h) E X_{k-1}^2 exactly for b = 0, sigma(x) = x.
    const double mom2_exact = 9.0 * std::pow(1.0 + tg.h, steps);
    const double se_mom2 = std::sqrt(std::max(0.0, s4 / n - mom2 * mom2) / n);
    CHECK(std::abs(mom2 - mom2_exact) <= 3.0 * se_mom2);
}

TEST_CASE("simulate_uncontrolled: per-step increments have zero conditional mean") {
    const auto m = testmodels::gbm_single(0.0, 0.6);
    const auto tg = TimeGrid::make(1.0, 5);
    const std::size_t n = 200'000;
    const auto bundle = simulate_uncontrolled(m, Vec::Constant(1, 2.0), tg, n, 99);
    for (int k = 0; k < tg.m; ++k) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double d = bundle.coord(p, k + 1, 0) - bundle.coord(p, k, 0);
            s1 += d;
            s2 += d * d;
        }
        const double mean = s1 / n;
        const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n);
        CHECK(std::abs(mean) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("simulate_uncontrolled is deterministic and thread-count independent") {
    const auto m = testmodels::gbm_single(0.05, 0.4);
    const auto tg = TimeGrid::make(0.5, 6);
    const Vec x0 = Vec::Constant(1, 1.0);
    const auto a = simulate_uncontrolled(m, x0, tg, 1000, 42);
    const auto b = simulate_uncontrolled(m, x0, tg, 1000, 42);
    CHECK(a.data == b.data);

    set_max_threads(1);
    const auto c = simulate_uncontrolled(m, x0, tg, 1000, 42);
    set_max_threads(0);
    CHECK(a.data == c.data);

    const auto d = simulate_uncontrolled(m, x0, tg, 1000, 43);
    CHECK(a.data != d.data);
}

TEST_CASE("path CSV dump has one row per (path, step)") {
    const auto m = testmodels::gbm_single(0.0, 0.3);
    const auto bundle =
        simulate_uncontrolled(m, Vec::Constant(1, 1.0), TimeGrid::make(1.0, 3), 2, 5);
    std::ostringstream os;
    write_paths_csv(bundle, os);
    const std::string text = os.str();
    std::size_t lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == 1 + 2 * 4);  // header + 2 paths x 4 states
    CHECK(text.rfind("path_id,k,x_1", 0) == 0);
}
