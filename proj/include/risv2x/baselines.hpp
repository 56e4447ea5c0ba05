#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "risv2x/env.hpp"
#include "risv2x/rng.hpp"

namespace risv2x {

enum class BaselineKind { kRandomRisRandomRa, kNoRisRandomRa };

std::string to_string(BaselineKind kind);
BaselineKind parse_baseline(const std::string& name);

/// Non-learning comparison policy. Emits raw actions at bucket centres so
/// that decoding recovers a uniform draw over the discrete choices; channel
/// and power come from one stream, phases from another.
class BaselinePolicy {
 public:
  BaselinePolicy(BaselineKind kind, const EnvConfig& env, std::uint64_t seed);

  Action act(std::span<const double> state);

  BaselineKind kind() const { return kind_; }

 private:
  BaselineKind kind_;
  int cues_;
  int pairs_;
  int elements_;
  int quantization_;
  int power_levels_;
  Rng allocation_rng_;
  Rng ris_rng_;
};

/// Raw value in [-1, 1] at the centre of bucket `index` out of `buckets`.
double bucket_center(int index, int buckets);

}  // namespace risv2x
