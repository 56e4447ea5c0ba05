#include "risv2x/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "risv2x/errors.hpp"

namespace risv2x {

void EnvConfig::validate() const {
  if (cues < 1) throw ConfigError("cues must be at least 1");
  if (pairs < 1) throw ConfigError("pairs must be at least 1");
  channel.validate();
  ris.validate();
  if (ris_active_elements > ris.elements)
    throw ConfigError("ris_active_elements exceeds ris_elements");
  if (!(v2v_power_min_dbm <= v2v_power_max_dbm)) throw ConfigError("V2V power range is empty");
  if (!(payload_bits >= 0.0)) throw ConfigError("payload must be non-negative");
  if (steps_per_episode < 1) throw ConfigError("steps_per_episode must be at least 1");
  if (!(fast_slot_s > 0.0)) throw ConfigError("fast slot must be positive");
  if (initial_aoi_slots < 1) throw ConfigError("initial AoI must be at least one slot");
  if (mobility.speed_min_mps < 0.0 || mobility.speed_max_mps < mobility.speed_min_mps)
    throw ConfigError("bad speed range");
  if (mobility.turn_probability < 0.0 || mobility.turn_probability > 1.0)
    throw ConfigError("turn probability must be in [0, 1]");
}

DecodedAction decode_action(std::span<const double> raw, int cues, int pairs, int elements,
                            int quantization, double power_min_dbm, double power_max_dbm) {
  const std::size_t expected = static_cast<std::size_t>(2 * pairs + elements);
  if (raw.size() != expected)
    throw std::invalid_argument("decode_action: expected " + std::to_string(expected) +
                                " entries, got " + std::to_string(raw.size()));
  DecodedAction d;
  auto unit = [&d](double x) {
    if (!std::isfinite(x)) {
      ++d.saturated;
      return 0.5;
    }
    if (x < -1.0 || x > 1.0) {
      ++d.saturated;
      x = std::clamp(x, -1.0, 1.0);
    }
    return (x + 1.0) / 2.0;
  };
  auto bucket = [](double u, int n) { return std::min(static_cast<int>(std::floor(u * n)), n - 1); };

  d.channel.resize(pairs);
  d.power_dbm.resize(pairs);
  d.phase_index.resize(elements);
  for (int k = 0; k < pairs; ++k) d.channel[k] = bucket(unit(raw[k]), cues);
  for (int k = 0; k < pairs; ++k)
    d.power_dbm[k] = power_min_dbm + std::round(unit(raw[pairs + k]) * (power_max_dbm - power_min_dbm));
  for (int f = 0; f < elements; ++f) d.phase_index[f] = bucket(unit(raw[2 * pairs + f]), quantization);
  return d;
}

VehicularEnv::VehicularEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  placement_ = spawn_vehicles(config_.network, config_.mobility, config_.cues, config_.pairs, config_.seed);
}

DecodedAction VehicularEnv::decode(std::span<const double> raw) const {
  return decode_action(raw, config_.cues, config_.pairs, config_.ris.elements, config_.ris.quantization,
                       config_.v2v_power_min_dbm, config_.v2v_power_max_dbm);
}

std::vector<double> VehicularEnv::reset(std::uint64_t episode_seed) {
  const int M = config_.cues;
  const int K = config_.pairs;

  Rng mobility = make_rng(config_.seed, Stream::kMobility, episode_seed);
  for (auto& v : placement_.vehicles)
    v = step_mobility(v, config_.network, config_.slow_slot_s(), mobility);
  pair_nearest(placement_, K);

  Rng shadow = make_rng(config_.seed, Stream::kShadowing, episode_seed);
  model_ = std::make_shared<const ChannelModel>(placement_, M, config_.bs, config_.ris, config_.channel, M, shadow);
  fading_rng_ = make_rng(config_.seed, Stream::kFading, episode_seed);
  current_ = model_->sample(fading_rng_);

  aoi_.aoi_slots.assign(M, config_.initial_aoi_slots);
  aoi_.threshold_bps_hz = config_.rate_threshold_bps_hz;
  aoi_.reset_value = 1;
  payload_.remaining_bits.assign(K, config_.payload_bits);
  payload_.initial_bits = config_.payload_bits;
  payload_.budget_slots = config_.steps_per_episode;
  payload_.elapsed_slots = 0;

  phase_ = PhaseShiftConfig::zeros(config_.ris.elements, config_.ris.quantization);
  for (int f = config_.active_elements(); f < config_.ris.elements; ++f) phase_.amplitude[f] = 0.0;
  last_channel_.resize(K);
  for (int k = 0; k < K; ++k) last_channel_[k] = k % M;
  last_interference_w_.assign(K, current_.noise_vehicle_w);

  slot_ = 0;
  started_ = true;
  state_ = build_state();
  return state_;
}

Environment::Step VehicularEnv::step(std::span<const double> action) {
  StepOutcome o = step(Action{std::vector<double>(action.begin(), action.end()), false});
  const bool terminal = o.transition.done && config_.terminal_at_horizon;
  return {std::move(o.transition.s_next), o.transition.r, o.transition.done, terminal};
}

StepOutcome VehicularEnv::step(const Action& action) {
  DecodedAction d = decode(action.raw);
  d.ris_off = d.ris_off || action.ris_off;
  return step_decoded(d, action.raw);
}

StepOutcome VehicularEnv::step_decoded(const DecodedAction& decoded, std::span<const double> raw) {
  if (!started_) throw ProtocolError("step called before reset");
  if (done()) throw ProtocolError("step called after the episode finished");
  const int M = config_.cues;
  const int K = config_.pairs;
  if (static_cast<int>(decoded.channel.size()) != K || static_cast<int>(decoded.power_dbm.size()) != K ||
      static_cast<int>(decoded.phase_index.size()) != config_.ris.elements)
    throw std::invalid_argument("step: decoded action has the wrong shape");
  saturation_count_ += decoded.saturated;

  StepOutcome out;
  out.decoded = decoded;
  out.transition.s = state_;
  out.transition.a.assign(raw.begin(), raw.end());

  for (int f = 0; f < config_.ris.elements; ++f) {
    phase_.index[f] = decoded.phase_index[f];
    phase_.amplitude[f] = (decoded.ris_off || f >= config_.active_elements()) ? 0.0 : 1.0;
  }
  phase_.validate();

  AllocationState alloc;
  alloc.channel = decoded.channel;
  alloc.v2i_power_w = dbm_to_watts(config_.v2i_power_dbm);
  alloc.v2v_power_w.resize(K);
  for (int k = 0; k < K; ++k)
    alloc.v2v_power_w[k] = payload_.delivered(k) ? 0.0 : dbm_to_watts(decoded.power_dbm[k]);

  out.metrics = config_.use_ris ? compute_link_metrics(current_, alloc, phase_)
                                : compute_link_metrics_direct(current_, alloc);

  aoi_ = update_aoi(aoi_, out.metrics.v2i_rate);
  payload_ = update_payload(payload_, out.metrics.v2v_rate, config_.channel.bandwidth_hz, config_.fast_slot_s);

  double aoi_sum = 0.0;
  for (long a : aoi_.aoi_slots) aoi_sum += static_cast<double>(a);
  double left_sum = 0.0;
  for (double b : payload_.remaining_bits)
    left_sum += config_.payload_bits > 0.0 ? b / config_.payload_bits : 0.0;
  out.transition.r = -config_.lambda_aoi * aoi_sum / M - config_.lambda_payload * left_sum / K;

  last_channel_ = decoded.channel;
  for (int k = 0; k < K; ++k)
    last_interference_w_[k] = out.metrics.v2v_interference[k] + current_.noise_vehicle_w;

  ++slot_;
  current_ = model_->sample(fading_rng_);
  state_ = build_state();
  out.transition.s_next = state_;
  out.transition.done = done();
  return out;
}

std::vector<double> VehicularEnv::build_state() const {
  const int M = config_.cues;
  const int K = config_.pairs;
  const auto& n = config_.normalization;
  std::vector<double> s;
  s.reserve(state_dim());

  auto gain_db = [](cd h) { return 10.0 * std::log10(std::max(std::norm(h), 1e-30)); };
  for (int m = 0; m < M; ++m) {
    const cd h = config_.use_ris
                     ? composite_channel(current_.cue_bs(m, m), current_.cue_ris(m, m), current_.ris_bs(m), phase_)
                     : current_.cue_bs(m, m);
    s.push_back((gain_db(h) - n.v2i_gain_center_db) / n.v2i_gain_scale_db);
  }
  for (int k = 0; k < K; ++k) {
    const int l = last_channel_[k];
    const cd h = config_.use_ris ? composite_channel(current_.pair_pair(l, k, k), current_.pair_ris(l, k),
                                                     current_.ris_pair(l, k), phase_)
                                 : current_.pair_pair(l, k, k);
    s.push_back((gain_db(h) - n.v2v_gain_center_db) / n.v2v_gain_scale_db);
  }
  for (int k = 0; k < K; ++k)
    s.push_back((10.0 * std::log10(last_interference_w_[k]) - n.interference_center_dbw) /
                n.interference_scale_db);
  for (int k = 0; k < K; ++k)
    s.push_back(config_.payload_bits > 0.0 ? payload_.remaining_bits[k] / config_.payload_bits : 0.0);
  for (int m = 0; m < M; ++m)
    s.push_back(static_cast<double>(aoi_.aoi_slots[m]) / config_.steps_per_episode);
  for (int f = 0; f < config_.ris.elements; ++f)
    s.push_back(static_cast<double>(phase_.index[f]) / config_.ris.quantization);
  return s;
}

}  // namespace risv2x
