#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "risv2x/rng.hpp"
#include "risv2x/topology.hpp"

namespace risv2x {

using cd = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;

/// rho * beta * d^-eta with rho given in dB at the 1 m reference distance.
struct PathLossModel {
  double rho_db = 0.0;
  double eta = 2.0;
  double shadow_sigma_db = 0.0;
};

struct LargeScaleParams {
  PathLossModel v2i{-15.3, 3.76, 8.0};       // 128.1 + 37.6 log10(d_km)
  PathLossModel v2v{-38.47, 3.0, 3.0};       // free-space intercept at 2 GHz
  PathLossModel vehicle_ris{-38.47, 2.0, 0.0};
  PathLossModel ris_bs{-38.47, 2.0, 0.0};
  double bs_antenna_gain_dbi = 8.0;
  double vehicle_antenna_gain_dbi = 3.0;
  double bs_noise_figure_db = 5.0;
  double vehicle_noise_figure_db = 11.0;
  double carrier_hz = 2e9;
  double bandwidth_hz = 1e6;
  double noise_power_dbm = -114.0;

  void validate() const;
  double wavelength(int subchannel) const;
};

struct RisGeometry {
  int elements = 12;
  double element_spacing_m = 0.075;  // half a wavelength at 2 GHz
  Vec3 position{475.0, 675.0, 25.0};
  Vec3 axis{1.0, 0.0, 0.0};  // unit vector along the array
  int quantization = 8;

  void validate() const;
};

/// Diagonal of the RIS reflection matrix: per-element discrete phase index
/// in [0, Q) and amplitude in [0, 1].
struct PhaseShiftConfig {
  int quantization = 8;
  std::vector<int> index;
  std::vector<double> amplitude;

  static PhaseShiftConfig zeros(int elements, int quantization);

  std::size_t size() const { return index.size(); }
  double theta(std::size_t f) const;
  cd coefficient(std::size_t f) const;
  void validate() const;
};

struct LargeScaleGain {
  double linear = 0.0;
  bool clamped = false;  // distance was below the 1 m reference
};

LargeScaleGain large_scale_gain(double distance_m, const PathLossModel& model, double shadowing_db);

/// Circularly symmetric unit-variance complex Gaussian, so |g|^2 ~ Exp(1).
cd sample_fast_fading(Rng& rng);

/// Steering vector exp(-j 2 pi (d / lambda) f sin(angle)), f = 0..F-1.
std::vector<cd> array_response(const RisGeometry& geometry, double angle_rad, double wavelength_m);

/// Angle between the RIS broadside and the direction towards `point`.
double ris_angle(const RisGeometry& geometry, const Vec3& point);

/// Large-scale root times propagation phase times array response.
/// `extra_gain_db` carries the terminal antenna gain.
std::vector<cd> ris_link_channel(const Vec3& terminal, const RisGeometry& geometry,
                                 const PathLossModel& model, double extra_gain_db,
                                 double shadowing_db, double wavelength_m);

/// ris_out^H * diag(beta e^{j theta}) * ris_in + direct.
cd composite_channel(cd direct, std::span<const cd> ris_in, std::span<const cd> ris_out,
                     const PhaseShiftConfig& phase);

double dbm_to_watts(double dbm);
double db_to_linear(double db);

/// Per-episode geometry-dependent gains. Direct-link entries are linear power
/// gains including antenna gains and shadowing; RIS entries are complex
/// vectors per sub-channel (no small-scale fading on the RIS hops).
class ChannelRealization {
 public:
  ChannelRealization() = default;
  ChannelRealization(int cues, int pairs, int subchannels, int elements);

  int cues() const { return cues_; }
  int pairs() const { return pairs_; }
  int subchannels() const { return subchannels_; }
  int elements() const { return elements_; }

  // direct complex coefficients on sub-channel l
  cd& cue_bs(int l, int m) { return cue_bs_[l * cues_ + m]; }
  cd cue_bs(int l, int m) const { return cue_bs_[l * cues_ + m]; }
  cd& pair_bs(int l, int k) { return pair_bs_[l * pairs_ + k]; }
  cd pair_bs(int l, int k) const { return pair_bs_[l * pairs_ + k]; }
  /// transmitter of pair `from` to receiver of pair `to`
  cd& pair_pair(int l, int from, int to) { return pair_pair_[(l * pairs_ + from) * pairs_ + to]; }
  cd pair_pair(int l, int from, int to) const {
    return pair_pair_[(l * pairs_ + from) * pairs_ + to];
  }
  cd& cue_pair(int l, int m, int k) { return cue_pair_[(l * cues_ + m) * pairs_ + k]; }
  cd cue_pair(int l, int m, int k) const { return cue_pair_[(l * cues_ + m) * pairs_ + k]; }

  std::span<cd> cue_ris(int l, int m) { return span_of(cue_ris_, (l * cues_ + m) * elements_); }
  std::span<const cd> cue_ris(int l, int m) const {
    return span_of(cue_ris_, (l * cues_ + m) * elements_);
  }
  std::span<cd> pair_ris(int l, int k) { return span_of(pair_ris_, (l * pairs_ + k) * elements_); }
  std::span<const cd> pair_ris(int l, int k) const {
    return span_of(pair_ris_, (l * pairs_ + k) * elements_);
  }
  std::span<cd> ris_pair(int l, int k) { return span_of(ris_pair_, (l * pairs_ + k) * elements_); }
  std::span<const cd> ris_pair(int l, int k) const {
    return span_of(ris_pair_, (l * pairs_ + k) * elements_);
  }
  std::span<cd> ris_bs(int l) { return span_of(ris_bs_, l * elements_); }
  std::span<const cd> ris_bs(int l) const { return span_of(ris_bs_, l * elements_); }

  double noise_bs_w = 0.0;
  double noise_vehicle_w = 0.0;

  bool all_finite() const;

 private:
  std::span<cd> span_of(std::vector<cd>& v, int offset) {
    return std::span<cd>(v.data() + offset, static_cast<std::size_t>(elements_));
  }
  std::span<const cd> span_of(const std::vector<cd>& v, int offset) const {
    return std::span<const cd>(v.data() + offset, static_cast<std::size_t>(elements_));
  }

  int cues_ = 0;
  int pairs_ = 0;
  int subchannels_ = 0;
  int elements_ = 0;
  std::vector<cd> cue_bs_, pair_bs_, pair_pair_, cue_pair_;
  std::vector<cd> cue_ris_, pair_ris_, ris_pair_, ris_bs_;
};

/// Slow-fading state for one episode. `sample` multiplies the direct roots
/// by fresh fast fading; RIS vectors are copied unchanged.
class ChannelModel {
 public:
  ChannelModel(const Placement& placement, int cues, const Vec3& bs, const RisGeometry& ris,
               const LargeScaleParams& params, int subchannels, Rng& shadow_rng);

  ChannelRealization sample(Rng& fading_rng) const;

  /// Linear power gain (incl. antenna gains and shadowing) of the direct links.
  double gain_cue_bs(int m) const { return cue_bs_[m]; }
  double gain_pair_bs(int k) const { return pair_bs_[k]; }
  double gain_pair_pair(int from, int to) const { return pair_pair_[from * pairs_ + to]; }
  double gain_cue_pair(int m, int k) const { return cue_pair_[m * pairs_ + k]; }
  int clamped_links() const { return clamped_; }

 private:
  int cues_;
  int pairs_;
  int subchannels_;
  std::vector<double> cue_bs_, pair_bs_, pair_pair_, cue_pair_;
  ChannelRealization template_;
  int clamped_ = 0;
};

}  // namespace risv2x
