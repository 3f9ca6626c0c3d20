#pragma once

// Samplers built directly on the mt19937_64 bit stream. The standard
// distributions are implementation-defined, so using them would make seeded
// output differ between standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace face::detail {

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller, cosine branch only: two uniforms per draw.
inline double normal(std::mt19937_64& rng, double mean, double stddev) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Uniform integer in [0, n) by rejection, n >= 1.
inline std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

}  // namespace face::detail
