#include "switchq/euler.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "switchq/parallel.hpp"
#include "switchq/rng.hpp"

namespace switchq {

Vec euler_step(const SwitchingModel& model, const Vec& x, int regime, double h,
               const Vec& shock) {
    if (!(h > 0.0)) throw std::invalid_argument("euler_step: h must be > 0");
    return x + model.drift(x, regime) * h +
           model.diffusion(x, regime) * (std::sqrt(h) * shock);
}

bool has_regime_independent_dynamics(const SwitchingModel& model, const Vec& probe) {
    if (model.q <= 1) return true;
    Vec offsets(3);
    offsets << 0.0, 0.7, -1.3;
    for (int p = 0; p < offsets.size(); ++p) {
        const Vec x = probe.array() + offsets[p];
        const Vec b0 = model.drift(x, 0);
        const Mat s0 = model.diffusion(x, 0);
        for (int i = 1; i < model.q; ++i) {
            if ((model.drift(x, i) - b0).cwiseAbs().maxCoeff() > 0.0) return false;
            if ((model.diffusion(x, i) - s0).cwiseAbs().maxCoeff() > 0.0) return false;
        }
    }
    return true;
}

PathBundle simulate_uncontrolled(const SwitchingModel& model, const Vec& x0,
                                 const TimeGrid& grid, std::size_t n_paths,
                                 std::uint64_t seed) {
    if (!has_regime_independent_dynamics(model, x0))
        throw std::invalid_argument(
            "simulate_uncontrolled: coefficients differ across regimes at a probe point");
    const int d = model.d;
    const int m = grid.m;
    const double sqh = std::sqrt(grid.h);

    PathBundle bundle;
    bundle.d = d;
    bundle.m = m;
    bundle.h = grid.h;
    bundle.seed = seed;
    bundle.n_paths = n_paths;
    bundle.data.resize(n_paths * static_cast<std::size_t>(m + 1) * static_cast<std::size_t>(d));

    parallel_for(n_paths, [&](std::size_t p) {
        Rng rng = stream_rng(seed, p);
        Vec x = x0;
        Vec shock(d);
        double* row = bundle.data.data() + p * static_cast<std::size_t>(m + 1) * d;
        for (int c = 0; c < d; ++c) row[c] = x[c];
        for (int k = 0; k < m; ++k) {
            for (int c = 0; c < d; ++c) shock[c] = rng.normal();
            x += model.drift(x, 0) * grid.h + model.diffusion(x, 0) * (sqh * shock);
            double* slot = row + static_cast<std::size_t>(k + 1) * d;
            for (int c = 0; c < d; ++c) slot[c] = x[c];
        }
    });
    return bundle;
}

void write_paths_csv(const PathBundle& bundle, std::ostream& os) {
    os << "path_id,k";
    for (int c = 0; c < bundle.d; ++c) os << ",x_" << (c + 1);
    os << "\n";
    char buf[40];
    for (std::size_t p = 0; p < bundle.n_paths; ++p) {
        for (int k = 0; k <= bundle.m; ++k) {
            os << p << ',' << k;
            for (int c = 0; c < bundle.d; ++c) {
                std::snprintf(buf, sizeof(buf), ",%.17g", bundle.coord(p, k, c));
                os << buf;
            }
            os << "\n";
        }
    }
}

}  // namespace switchq
