#pragma once

#include <cstdint>
#include <random>

namespace gffdrift {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Independent stream tags for the per-path generators.
enum class Stream : std::uint64_t { Field = 1, Noise = 2, Pilot = 3 };

/// Counter-based split: the seed for (master, index, stream) depends only on
/// those three values, never on the order in which paths are scheduled.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, Stream stream) noexcept;

/// Engine used throughout the project; seeded from derive_seed().
using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

} // namespace gffdrift
