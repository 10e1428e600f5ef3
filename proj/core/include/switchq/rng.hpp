#pragma once

#include <cmath>
#include <cstdint>

namespace switchq {

// SplitMix64 with Box-Muller normals. Every consumer derives one stream per
// logical unit of work (a path, a sample chunk, ...) from a user seed and a
// stream id, so simulations reproduce bit-for-bit no matter how work is
// scheduled. The Gaussian method is pinned: basic Box-Muller, sine component
// cached and consumed before the next pair is drawn.
class Rng {
public:
    explicit Rng(std::uint64_t state) : state_(state) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1]; never 0, so log() in normal() is safe.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Decorrelated child stream for (seed, stream id).
inline Rng stream_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix64(seed + 0x9e3779b97f4a7c15ULL * (stream + 1)));
}

// Label used to keep independent phases (training vs. weight estimation vs.
// transition counting) on disjoint streams of the same user seed.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t label) {
    return mix64(seed ^ (0xd1342543de82ef95ULL * (label + 1)));
}

}  // namespace switchq
