#include "risv2x/phy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "risv2x/errors.hpp"

namespace risv2x {

void AllocationState::validate(int cues) const {
  if (channel.size() != v2v_power_w.size())
    throw std::invalid_argument("allocation: channel/power length mismatch");
  for (std::size_t k = 0; k < channel.size(); ++k) {
    if (channel[k] < 0 || channel[k] >= cues)
      throw std::invalid_argument("allocation: sub-channel index out of range");
    if (!(v2v_power_w[k] >= 0.0) || !std::isfinite(v2v_power_w[k]))
      throw std::invalid_argument("allocation: V2V power must be finite and non-negative");
  }
  if (!(v2i_power_w >= 0.0) || !std::isfinite(v2i_power_w))
    throw std::invalid_argument("allocation: V2I power must be finite and non-negative");
}

double rate_from_sinr(double sinr) { return std::log2(1.0 + sinr); }

double compute_v2i_sinr(const ChannelRealization& h, const AllocationState& alloc,
                        const PhaseShiftConfig& phase, int m) {
  const int l = m;  // CUE m owns sub-channel m
  const double signal =
      alloc.v2i_power_w * std::norm(composite_channel(h.cue_bs(l, m), h.cue_ris(l, m), h.ris_bs(l), phase));
  double interference = 0.0;
  for (int k = 0; k < h.pairs(); ++k) {
    if (!alloc.reuses(m, k)) continue;
    interference += alloc.v2v_power_w[k] *
                    std::norm(composite_channel(h.pair_bs(l, k), h.pair_ris(l, k), h.ris_bs(l), phase));
  }
  return signal / (interference + h.noise_bs_w);
}

V2vSinr compute_v2v_sinr(const ChannelRealization& h, const AllocationState& alloc,
                         const PhaseShiftConfig& phase, int k) {
  const int l = alloc.channel[k];
  const double signal = alloc.v2v_power_w[k] * std::norm(composite_channel(
                                                   h.pair_pair(l, k, k), h.pair_ris(l, k), h.ris_pair(l, k), phase));
  // the CUE that owns sub-channel l, then every other pair sharing it
  double interference = alloc.v2i_power_w * std::norm(composite_channel(
                                                h.cue_pair(l, l, k), h.cue_ris(l, l), h.ris_pair(l, k), phase));
  for (int j = 0; j < h.pairs(); ++j) {
    if (j == k || alloc.channel[j] != l) continue;
    interference += alloc.v2v_power_w[j] * std::norm(composite_channel(
                                               h.pair_pair(l, j, k), h.pair_ris(l, j), h.ris_pair(l, k), phase));
  }
  return {signal / (interference + h.noise_vehicle_w), interference};
}

LinkMetrics compute_link_metrics(const ChannelRealization& h, const AllocationState& alloc,
                                 const PhaseShiftConfig& phase) {
  alloc.validate(h.cues());
  if (static_cast<int>(alloc.channel.size()) != h.pairs())
    throw std::invalid_argument("allocation: pair count does not match channels");
  LinkMetrics out;
  out.v2i_sinr.resize(h.cues());
  out.v2i_rate.resize(h.cues());
  for (int m = 0; m < h.cues(); ++m) {
    out.v2i_sinr[m] = compute_v2i_sinr(h, alloc, phase, m);
    out.v2i_rate[m] = rate_from_sinr(out.v2i_sinr[m]);
  }
  out.v2v_sinr.resize(h.pairs());
  out.v2v_rate.resize(h.pairs());
  out.v2v_interference.resize(h.pairs());
  for (int k = 0; k < h.pairs(); ++k) {
    const V2vSinr s = compute_v2v_sinr(h, alloc, phase, k);
    out.v2v_sinr[k] = s.sinr;
    out.v2v_interference[k] = s.interference_w;
    out.v2v_rate[k] = rate_from_sinr(s.sinr);
  }
  return out;
}

LinkMetrics compute_link_metrics_direct(const ChannelRealization& h, const AllocationState& alloc) {
  alloc.validate(h.cues());
  if (static_cast<int>(alloc.channel.size()) != h.pairs())
    throw std::invalid_argument("allocation: pair count does not match channels");
  const int M = h.cues();
  const int K = h.pairs();
  LinkMetrics out;
  out.v2i_sinr.resize(M);
  out.v2i_rate.resize(M);
  for (int m = 0; m < M; ++m) {
    double interference = 0.0;
    for (int k = 0; k < K; ++k)
      if (alloc.channel[k] == m) interference += alloc.v2v_power_w[k] * std::norm(h.pair_bs(m, k));
    out.v2i_sinr[m] = alloc.v2i_power_w * std::norm(h.cue_bs(m, m)) / (interference + h.noise_bs_w);
    out.v2i_rate[m] = rate_from_sinr(out.v2i_sinr[m]);
  }
  out.v2v_sinr.resize(K);
  out.v2v_rate.resize(K);
  out.v2v_interference.resize(K);
  for (int k = 0; k < K; ++k) {
    const int l = alloc.channel[k];
    double interference = alloc.v2i_power_w * std::norm(h.cue_pair(l, l, k));
    for (int j = 0; j < K; ++j)
      if (j != k && alloc.channel[j] == l)
        interference += alloc.v2v_power_w[j] * std::norm(h.pair_pair(l, j, k));
    out.v2v_interference[k] = interference;
    out.v2v_sinr[k] = alloc.v2v_power_w[k] * std::norm(h.pair_pair(l, k, k)) /
                      (interference + h.noise_vehicle_w);
    out.v2v_rate[k] = rate_from_sinr(out.v2v_sinr[k]);
  }
  return out;
}

AoiState update_aoi(const AoiState& state, std::span<const double> v2i_rate) {
  if (v2i_rate.size() != state.aoi_slots.size())
    throw std::invalid_argument("update_aoi: rate count does not match AoI count");
  AoiState out = state;
  for (std::size_t m = 0; m < v2i_rate.size(); ++m) {
    if (!std::isfinite(v2i_rate[m])) throw std::invalid_argument("update_aoi: non-finite rate");
    out.aoi_slots[m] = v2i_rate[m] >= state.threshold_bps_hz ? state.reset_value : state.aoi_slots[m] + 1;
  }
  return out;
}

PayloadState update_payload(const PayloadState& state, std::span<const double> v2v_rate,
                            double bandwidth_hz, double fast_slot_s) {
  if (state.elapsed_slots >= state.budget_slots)
    throw ProtocolError("update_payload: time budget already exhausted");
  if (v2v_rate.size() != state.remaining_bits.size())
    throw std::invalid_argument("update_payload: rate count does not match pair count");
  PayloadState out = state;
  for (std::size_t k = 0; k < v2v_rate.size(); ++k)
    out.remaining_bits[k] =
        std::max(0.0, state.remaining_bits[k] - bandwidth_hz * v2v_rate[k] * fast_slot_s);
  out.elapsed_slots += 1;
  return out;
}

DeliveryRate delivery_success_rate(std::span<const PayloadState> episodes) {
  if (episodes.empty()) throw std::invalid_argument("delivery_success_rate: no episodes");
  const std::size_t K = episodes.front().remaining_bits.size();
  if (K == 0) throw std::invalid_argument("delivery_success_rate: no pairs");
  DeliveryRate out;
  out.per_pair.assign(K, 0.0);
  std::size_t delivered = 0;
  for (const PayloadState& e : episodes) {
    if (e.remaining_bits.size() != K)
      throw std::invalid_argument("delivery_success_rate: inconsistent pair counts");
    for (std::size_t k = 0; k < K; ++k)
      if (e.delivered(k)) {
        out.per_pair[k] += 1.0;
        ++delivered;
      }
  }
  for (double& p : out.per_pair) p /= static_cast<double>(episodes.size());
  out.aggregate = static_cast<double>(delivered) / static_cast<double>(episodes.size() * K);
  return out;
}

}  // namespace risv2x
