#include "risv2x/baselines.hpp"

#include <cmath>
#include <random>

#include "risv2x/errors.hpp"

namespace risv2x {

std::string to_string(BaselineKind kind) {
  return kind == BaselineKind::kRandomRisRandomRa ? "random_ris_random_ra" : "no_ris_random_ra";
}

BaselineKind parse_baseline(const std::string& name) {
  if (name == "random_ris_random_ra") return BaselineKind::kRandomRisRandomRa;
  if (name == "no_ris_random_ra") return BaselineKind::kNoRisRandomRa;
  throw ConfigError("unknown baseline '" + name + "'");
}

double bucket_center(int index, int buckets) { return 2.0 * (index + 0.5) / buckets - 1.0; }

BaselinePolicy::BaselinePolicy(BaselineKind kind, const EnvConfig& env, std::uint64_t seed)
    : kind_(kind),
      cues_(env.cues),
      pairs_(env.pairs),
      elements_(env.ris.elements),
      quantization_(env.ris.quantization),
      power_levels_(static_cast<int>(std::llround(env.v2v_power_max_dbm - env.v2v_power_min_dbm)) + 1),
      allocation_rng_(make_rng(seed, Stream::kBaselineAllocation)),
      ris_rng_(make_rng(seed, Stream::kBaselineRis)) {
  env.validate();
}

Action BaselinePolicy::act(std::span<const double>) {
  Action a;
  a.raw.resize(static_cast<std::size_t>(2 * pairs_ + elements_));
  std::uniform_int_distribution<int> channel(0, cues_ - 1);
  std::uniform_int_distribution<int> level(0, power_levels_ - 1);
  for (int k = 0; k < pairs_; ++k) a.raw[k] = bucket_center(channel(allocation_rng_), cues_);
  for (int k = 0; k < pairs_; ++k) {
    // Power decodes by rounding, so level i sits exactly at i / (levels - 1).
    const int i = level(allocation_rng_);
    a.raw[pairs_ + k] = power_levels_ > 1 ? 2.0 * i / (power_levels_ - 1) - 1.0 : -1.0;
  }
  if (kind_ == BaselineKind::kNoRisRandomRa) {
    for (int f = 0; f < elements_; ++f) a.raw[2 * pairs_ + f] = bucket_center(0, quantization_);
    a.ris_off = true;
  } else {
    std::uniform_int_distribution<int> phase(0, quantization_ - 1);
    for (int f = 0; f < elements_; ++f) a.raw[2 * pairs_ + f] = bucket_center(phase(ris_rng_), quantization_);
  }
  return a;
}

}  // namespace risv2x
