#pragma once

#include <cstdint>

namespace tfqkd {

/// Counter-based random stream: every draw is a pure function of
/// (seed, pulse index, slot), so any partitioning of pulses across threads
/// reproduces the serial stream bit-exactly.
namespace rng {

inline constexpr unsigned kSlotsPerPulse = 8;

/// SplitMix64 finalizer — a high-quality 64-bit mixing permutation.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// The raw 64-bit value for a (seed, pulse, slot) coordinate.
inline std::uint64_t raw(std::uint64_t seed, std::uint64_t pulse, unsigned slot) {
    const std::uint64_t counter = pulse * kSlotsPerPulse + slot + 1;
    return mix64(seed + counter * 0x9E3779B97F4A7C15ULL);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double u01(std::uint64_t seed, std::uint64_t pulse, unsigned slot) {
    return static_cast<double>(raw(seed, pulse, slot) >> 11) * 0x1.0p-53;
}

}  // namespace rng
}  // namespace tfqkd
