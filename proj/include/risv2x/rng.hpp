#pragma once

#include <cstdint>
#include <random>

namespace risv2x {

using Rng = std::mt19937_64;

/// Independent random streams derived from one experiment seed. Each
/// purpose draws from its own stream so that, e.g., changing the RIS size
/// does not shift the fast-fading sequence.
enum class Stream : std::uint32_t {
  kPlacement = 1,
  kMobility = 2,
  kShadowing = 3,
  kFading = 4,
  kPolicy = 5,
  kReplay = 6,
  kInit = 7,
  kBaselineAllocation = 8,
  kBaselineRis = 9,
};

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace risv2x
