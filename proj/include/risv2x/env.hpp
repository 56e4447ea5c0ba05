#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "risv2x/channel.hpp"
#include "risv2x/phy.hpp"
#include "risv2x/rng.hpp"
#include "risv2x/topology.hpp"

namespace risv2x {

/// Episodic reset/step protocol shared by the vehicular environment, the
/// toy environments in tests, and everything that drives them.
class Environment {
 public:
  struct Step {
    std::vector<double> next_state;
    double reward = 0.0;
    bool done = false;      // episode over
    bool terminal = false;  // no value beyond this step; false at a time limit
  };

  virtual ~Environment() = default;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual std::vector<double> reset(std::uint64_t episode_seed) = 0;
  virtual Step step(std::span<const double> action) = 0;
};

/// Affine standardisation of dB-valued state entries: (dB - center) / scale.
struct StateNormalization {
  double v2i_gain_center_db = -102.0;
  double v2i_gain_scale_db = 15.0;
  double v2v_gain_center_db = -105.0;
  double v2v_gain_scale_db = 15.0;
  double interference_center_dbw = -116.0;
  double interference_scale_db = 15.0;
};

struct EnvConfig {
  int cues = 4;
  int pairs = 4;
  RoadNetwork network = RoadNetwork::urban_default();
  MobilityConfig mobility;
  LargeScaleParams channel;
  RisGeometry ris;
  int ris_active_elements = -1;  // leading elements switched on; -1 = all
  bool use_ris = true;           // false selects the direct-only metric path
  Vec3 bs{-25.0, -25.0, 25.0};
  double v2i_power_dbm = 23.0;
  double v2v_power_min_dbm = 1.0;
  double v2v_power_max_dbm = 23.0;
  double rate_threshold_bps_hz = 3.0;
  double payload_bits = 8.0 * 1060.0 * 8.0;
  int steps_per_episode = 100;
  double fast_slot_s = 1e-3;
  long initial_aoi_slots = 100;
  double lambda_aoi = 0.1;
  double lambda_payload = 1.0;
  // Treat the last slot as a true terminal state rather than a time limit.
  bool terminal_at_horizon = false;
  StateNormalization normalization;
  std::uint64_t seed = 0;

  void validate() const;
  int active_elements() const { return ris_active_elements < 0 ? ris.elements : ris_active_elements; }
  double slow_slot_s() const { return steps_per_episode * fast_slot_s; }
  std::size_t state_dim() const {
    return static_cast<std::size_t>(2 * cues + 3 * pairs + ris.elements);
  }
  std::size_t action_dim() const { return static_cast<std::size_t>(2 * pairs + ris.elements); }
};

/// Raw agent output in [-1, 1]^(2K+F), laid out as [channel | power | phase].
struct Action {
  std::vector<double> raw;
  bool ris_off = false;  // force all RIS amplitudes to zero
};

struct DecodedAction {
  std::vector<int> channel;
  std::vector<double> power_dbm;
  std::vector<int> phase_index;
  bool ris_off = false;
  int saturated = 0;  // raw entries that were clamped into [-1, 1]
};

DecodedAction decode_action(std::span<const double> raw, int cues, int pairs, int elements,
                            int quantization, double power_min_dbm, double power_max_dbm);

struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
};

struct StepOutcome {
  Transition transition;
  LinkMetrics metrics;
  DecodedAction decoded;
};

class VehicularEnv final : public Environment {
 public:
  explicit VehicularEnv(EnvConfig config);

  std::size_t state_dim() const override { return config_.state_dim(); }
  std::size_t action_dim() const override { return config_.action_dim(); }

  std::vector<double> reset(std::uint64_t episode_seed) override;
  Step step(std::span<const double> action) override;

  StepOutcome step(const Action& action);
  StepOutcome step_decoded(const DecodedAction& decoded, std::span<const double> raw);

  DecodedAction decode(std::span<const double> raw) const;

  const EnvConfig& config() const { return config_; }
  const AoiState& aoi() const { return aoi_; }
  const PayloadState& payload() const { return payload_; }
  const PhaseShiftConfig& phase() const { return phase_; }
  const ChannelRealization& channels() const { return current_; }
  const Placement& placement() const { return placement_; }
  int slot() const { return slot_; }
  bool done() const { return slot_ >= config_.steps_per_episode; }
  long saturation_count() const { return saturation_count_; }
  const std::vector<double>& state() const { return state_; }

 private:
  std::vector<double> build_state() const;

  EnvConfig config_;
  Placement placement_;
  std::shared_ptr<const ChannelModel> model_;
  ChannelRealization current_;
  Rng fading_rng_;
  AoiState aoi_;
  PayloadState payload_;
  PhaseShiftConfig phase_;
  std::vector<int> last_channel_;
  std::vector<double> last_interference_w_;  // interference plus noise at each V2V receiver
  std::vector<double> state_;
  int slot_ = 0;
  bool started_ = false;
  long saturation_count_ = 0;
};

}  // namespace risv2x
