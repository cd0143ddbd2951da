#pragma once

#include <cstdint>
#include <random>

namespace slacksim {

/// splitmix64 step (Steele, Lea, Vigna) used to expand one user seed into
/// well-separated stream seeds. Fixed algorithm, documented in the README,
/// so generated workloads are identical across platforms.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random stream: mt19937_64 seeded via splitmix64, uniform
/// doubles built from the top 53 bits (never via distribution objects, whose
/// output is implementation-defined).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64(s);
        for (std::uint64_t i = 0; i < stream; ++i) a = splitmix64(s);
        engine_.seed(a);
    }

    /// Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Symmetric jitter factor in [1 - j, 1 + j).
    double jitter_factor(double j) { return 1.0 + j * (2.0 * uniform01() - 1.0); }

private:
    std::mt19937_64 engine_;
};

}  // namespace slacksim
