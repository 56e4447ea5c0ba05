#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "risv2x/channel.hpp"

namespace risv2x {

/// Spectrum reuse and power for one fast slot. Pair k occupies CUE
/// channel[k]'s sub-channel, which encodes x[m][k] with exactly one m per k.
/// A pair that has finished its payload transmits with zero power.
struct AllocationState {
  std::vector<int> channel;      // per pair, in [0, M)
  std::vector<double> v2v_power_w;
  double v2i_power_w = 0.0;

  bool reuses(int m, int k) const { return channel[k] == m; }
  void validate(int cues) const;
};

struct LinkMetrics {
  std::vector<double> v2i_sinr;
  std::vector<double> v2v_sinr;
  std::vector<double> v2i_rate;  // bps/Hz
  std::vector<double> v2v_rate;
  std::vector<double> v2v_interference;  // I_k in watts, noise excluded
};

struct V2vSinr {
  double sinr = 0.0;
  double interference_w = 0.0;
};

double compute_v2i_sinr(const ChannelRealization& h, const AllocationState& alloc,
                        const PhaseShiftConfig& phase, int m);

V2vSinr compute_v2v_sinr(const ChannelRealization& h, const AllocationState& alloc,
                         const PhaseShiftConfig& phase, int k);

LinkMetrics compute_link_metrics(const ChannelRealization& h, const AllocationState& alloc,
                                 const PhaseShiftConfig& phase);

/// Same quantities with the RIS absent: direct coefficients only.
LinkMetrics compute_link_metrics_direct(const ChannelRealization& h, const AllocationState& alloc);

double rate_from_sinr(double sinr);

struct AoiState {
  std::vector<long> aoi_slots;
  double threshold_bps_hz = 3.0;
  long reset_value = 1;
};

AoiState update_aoi(const AoiState& state, std::span<const double> v2i_rate);

struct PayloadState {
  std::vector<double> remaining_bits;
  double initial_bits = 8.0 * 1060.0 * 8.0;
  int budget_slots = 100;
  int elapsed_slots = 0;

  bool delivered(std::size_t k) const { return remaining_bits[k] <= 0.0; }
};

PayloadState update_payload(const PayloadState& state, std::span<const double> v2v_rate,
                            double bandwidth_hz, double fast_slot_s);

struct DeliveryRate {
  std::vector<double> per_pair;
  double aggregate = 0.0;
};

/// Fraction of (episode, pair) outcomes with nothing left to send.
DeliveryRate delivery_success_rate(std::span<const PayloadState> episodes);

}  // namespace risv2x
