#pragma once

#include <cstdint>
#include <random>

namespace gridfc {

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
/// Hand-rolled so results are identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [-a, a).
inline double uniform_sym(std::mt19937_64& rng, double a) {
    return a * (2.0 * uniform01(rng) - 1.0);
}

/// Uniform integer in [0, n) by modulo; n is tiny next to 2^64, so the bias
/// is immaterial and the draw count stays at exactly one per call.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

}  // namespace gridfc
