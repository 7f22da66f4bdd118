#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace magic_meter {

/// Engine used everywhere randomness is needed. The standard fixes its output
/// sequence bit-for-bit, so seeded results are portable across toolchains.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of item `index` in a stream controlled by `master`:
///
///     derive_seed(m, i) = mix64(m + 0x9E3779B97F4A7C15 * (i + 1))
///
/// Items can be generated in any order (or in parallel) and still get the
/// same seed as in a sequential run.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
}

// std::uniform_*_distribution are implementation-defined; these are not.

/// Uniform integer in [0, n). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    if (n <= 1) {
        return 0;
    }
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace magic_meter
