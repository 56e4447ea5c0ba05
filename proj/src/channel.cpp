#include "risv2x/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "risv2x/errors.hpp"

namespace risv2x {

void LargeScaleParams::validate() const {
  for (const PathLossModel* m : {&v2i, &v2v, &vehicle_ris, &ris_bs}) {
    if (!(m->eta > 0.0)) throw ConfigError("path loss exponent must be positive");
    if (!std::isfinite(m->rho_db) || !(m->shadow_sigma_db >= 0.0))
      throw ConfigError("path loss constant/shadowing must be finite and non-negative");
  }
  if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
  if (!(carrier_hz > 0.0)) throw ConfigError("carrier frequency must be positive");
  for (double g : {bs_antenna_gain_dbi, vehicle_antenna_gain_dbi, bs_noise_figure_db,
                   vehicle_noise_figure_db, noise_power_dbm})
    if (!std::isfinite(g)) throw ConfigError("antenna gains and noise figures must be finite");
}

double LargeScaleParams::wavelength(int subchannel) const {
  return kSpeedOfLight / (carrier_hz + subchannel * bandwidth_hz);
}

void RisGeometry::validate() const {
  if (elements < 0) throw ConfigError("RIS element count must be non-negative");
  if (!(element_spacing_m > 0.0)) throw ConfigError("RIS element spacing must be positive");
  if (quantization < 2) throw ConfigError("RIS phase quantization must be at least 2");
  const double n = std::sqrt(axis.x * axis.x + axis.y * axis.y + axis.z * axis.z);
  if (std::abs(n - 1.0) > 1e-9) throw ConfigError("RIS axis must be a unit vector");
}

PhaseShiftConfig PhaseShiftConfig::zeros(int elements, int quantization) {
  PhaseShiftConfig p;
  p.quantization = quantization;
  p.index.assign(elements, 0);
  p.amplitude.assign(elements, 1.0);
  return p;
}

double PhaseShiftConfig::theta(std::size_t f) const {
  return 2.0 * std::numbers::pi * index[f] / quantization;
}

cd PhaseShiftConfig::coefficient(std::size_t f) const { return std::polar(amplitude[f], theta(f)); }

void PhaseShiftConfig::validate() const {
  if (quantization < 2) throw std::invalid_argument("phase config: quantization < 2");
  if (index.size() != amplitude.size())
    throw std::invalid_argument("phase config: index/amplitude length mismatch");
  for (std::size_t f = 0; f < index.size(); ++f) {
    if (index[f] < 0 || index[f] >= quantization)
      throw std::invalid_argument("phase config: index out of [0, Q)");
    if (!(amplitude[f] >= 0.0 && amplitude[f] <= 1.0))
      throw std::invalid_argument("phase config: amplitude out of [0, 1]");
  }
}

LargeScaleGain large_scale_gain(double distance_m, const PathLossModel& model, double shadowing_db) {
  LargeScaleGain out;
  double d = distance_m;
  if (!(d >= 1.0)) {
    d = 1.0;
    out.clamped = true;
  }
  out.linear = db_to_linear(model.rho_db + shadowing_db) * std::pow(d, -model.eta);
  return out;
}

cd sample_fast_fading(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::numbers::sqrt2 / 2.0);
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

std::vector<cd> array_response(const RisGeometry& geometry, double angle_rad, double wavelength_m) {
  if (!(wavelength_m > 0.0)) throw std::invalid_argument("array_response: wavelength must be positive");
  if (std::abs(angle_rad) > std::numbers::pi / 2.0 + 1e-12)
    throw std::invalid_argument("array_response: angle outside [-pi/2, pi/2]");
  std::vector<cd> a(static_cast<std::size_t>(geometry.elements));
  const double step = -2.0 * std::numbers::pi * geometry.element_spacing_m / wavelength_m *
                      std::sin(angle_rad);
  for (int f = 0; f < geometry.elements; ++f) a[f] = std::polar(1.0, step * f);
  return a;
}

double ris_angle(const RisGeometry& geometry, const Vec3& point) {
  const double dx = point.x - geometry.position.x;
  const double dy = point.y - geometry.position.y;
  const double dz = point.z - geometry.position.z;
  const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (!(d > 0.0)) throw std::invalid_argument("ris_angle: point coincides with the RIS");
  const double s = (dx * geometry.axis.x + dy * geometry.axis.y + dz * geometry.axis.z) / d;
  return std::asin(std::clamp(s, -1.0, 1.0));
}

std::vector<cd> ris_link_channel(const Vec3& terminal, const RisGeometry& geometry,
                                 const PathLossModel& model, double extra_gain_db,
                                 double shadowing_db, double wavelength_m) {
  const double d = distance(terminal, geometry.position);
  if (!(d > 0.0)) throw std::invalid_argument("ris_link_channel: terminal coincides with the RIS");
  const double root = std::sqrt(large_scale_gain(d, model, shadowing_db + extra_gain_db).linear);
  const cd common = std::polar(root, -2.0 * std::numbers::pi * d / wavelength_m);
  std::vector<cd> h = array_response(geometry, ris_angle(geometry, terminal), wavelength_m);
  for (cd& e : h) e *= common;
  return h;
}

cd composite_channel(cd direct, std::span<const cd> ris_in, std::span<const cd> ris_out,
                     const PhaseShiftConfig& phase) {
  if (ris_in.size() != phase.size() || ris_out.size() != phase.size())
    throw std::invalid_argument("composite_channel: vector length does not match RIS size");
  cd acc{0.0, 0.0};
  for (std::size_t f = 0; f < ris_in.size(); ++f)
    acc += std::conj(ris_out[f]) * phase.coefficient(f) * ris_in[f];
  return acc + direct;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ChannelRealization::ChannelRealization(int cues, int pairs, int subchannels, int elements)
    : cues_(cues), pairs_(pairs), subchannels_(subchannels), elements_(elements) {
  const auto L = static_cast<std::size_t>(subchannels);
  cue_bs_.assign(L * cues, cd{});
  pair_bs_.assign(L * pairs, cd{});
  pair_pair_.assign(L * pairs * pairs, cd{});
  cue_pair_.assign(L * cues * pairs, cd{});
  cue_ris_.assign(L * cues * elements, cd{});
  pair_ris_.assign(L * pairs * elements, cd{});
  ris_pair_.assign(L * pairs * elements, cd{});
  ris_bs_.assign(L * elements, cd{});
}

bool ChannelRealization::all_finite() const {
  auto ok = [](const std::vector<cd>& v) {
    for (const cd& c : v)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
  };
  return ok(cue_bs_) && ok(pair_bs_) && ok(pair_pair_) && ok(cue_pair_) && ok(cue_ris_) &&
         ok(pair_ris_) && ok(ris_pair_) && ok(ris_bs_) && std::isfinite(noise_bs_w) &&
         std::isfinite(noise_vehicle_w);
}

ChannelModel::ChannelModel(const Placement& placement, int cues, const Vec3& bs,
                           const RisGeometry& ris, const LargeScaleParams& params, int subchannels,
                           Rng& shadow_rng)
    : cues_(cues), pairs_(static_cast<int>(placement.tx.size())), subchannels_(subchannels) {
  params.validate();
  ris.validate();
  if (cues < 1 || static_cast<std::size_t>(cues) > placement.vehicles.size())
    throw ConfigError("channel model: CUE count exceeds placed vehicles");
  if (subchannels < 1) throw ConfigError("channel model: need at least one sub-channel");

  const auto& veh = placement.vehicles;
  std::normal_distribution<double> unit(0.0, 1.0);
  auto shadow = [&](const PathLossModel& m) { return m.shadow_sigma_db * unit(shadow_rng); };
  const double g_bs = params.bs_antenna_gain_dbi;
  const double g_v = params.vehicle_antenna_gain_dbi;

  auto direct = [&](const Vec3& a, const Vec3& b, const PathLossModel& m, double antennas_db) {
    const double s = shadow(m);
    const LargeScaleGain g = large_scale_gain(distance(a, b), m, s + antennas_db);
    clamped_ += g.clamped ? 1 : 0;
    return g.linear;
  };

  cue_bs_.resize(cues_);
  for (int m = 0; m < cues_; ++m) cue_bs_[m] = direct(veh[m].position, bs, params.v2i, g_v + g_bs);
  pair_bs_.resize(pairs_);
  for (int k = 0; k < pairs_; ++k)
    pair_bs_[k] = direct(veh[placement.tx[k]].position, bs, params.v2i, g_v + g_bs);
  // A vehicle that is both the interferer and the victim receiver is excluded
  // (half duplex), so those entries stay zero.
  pair_pair_.assign(static_cast<std::size_t>(pairs_) * pairs_, 0.0);
  for (int from = 0; from < pairs_; ++from)
    for (int to = 0; to < pairs_; ++to) {
      if (placement.tx[from] == placement.rx[to]) continue;
      pair_pair_[from * pairs_ + to] =
          direct(veh[placement.tx[from]].position, veh[placement.rx[to]].position, params.v2v, 2.0 * g_v);
    }
  cue_pair_.assign(static_cast<std::size_t>(cues_) * pairs_, 0.0);
  for (int m = 0; m < cues_; ++m)
    for (int k = 0; k < pairs_; ++k) {
      const double g =
          direct(veh[m].position, veh[placement.rx[k]].position, params.v2v, 2.0 * g_v);
      if (static_cast<std::size_t>(m) != placement.rx[k]) cue_pair_[m * pairs_ + k] = g;
    }

  template_ = ChannelRealization(cues_, pairs_, subchannels_, ris.elements);
  template_.noise_bs_w = dbm_to_watts(params.noise_power_dbm + params.bs_noise_figure_db);
  template_.noise_vehicle_w = dbm_to_watts(params.noise_power_dbm + params.vehicle_noise_figure_db);

  std::vector<double> s_cue(cues_), s_tx(pairs_), s_rx(pairs_);
  for (auto& s : s_cue) s = shadow(params.vehicle_ris);
  for (auto& s : s_tx) s = shadow(params.vehicle_ris);
  for (auto& s : s_rx) s = shadow(params.vehicle_ris);
  const double s_bs = shadow(params.ris_bs);

  for (int l = 0; l < subchannels_; ++l) {
    const double lambda = params.wavelength(l);
    auto fill = [](std::span<cd> dst, const std::vector<cd>& src) {
      std::copy(src.begin(), src.end(), dst.begin());
    };
    for (int m = 0; m < cues_; ++m)
      fill(template_.cue_ris(l, m),
           ris_link_channel(veh[m].position, ris, params.vehicle_ris, g_v, s_cue[m], lambda));
    for (int k = 0; k < pairs_; ++k) {
      fill(template_.pair_ris(l, k), ris_link_channel(veh[placement.tx[k]].position, ris,
                                                      params.vehicle_ris, g_v, s_tx[k], lambda));
      fill(template_.ris_pair(l, k), ris_link_channel(veh[placement.rx[k]].position, ris,
                                                      params.vehicle_ris, g_v, s_rx[k], lambda));
    }
    fill(template_.ris_bs(l), ris_link_channel(bs, ris, params.ris_bs, g_bs, s_bs, lambda));
  }
}

ChannelRealization ChannelModel::sample(Rng& fading_rng) const {
  ChannelRealization h = template_;
  for (int l = 0; l < subchannels_; ++l) {
    for (int m = 0; m < cues_; ++m) h.cue_bs(l, m) = std::sqrt(cue_bs_[m]) * sample_fast_fading(fading_rng);
    for (int k = 0; k < pairs_; ++k)
      h.pair_bs(l, k) = std::sqrt(pair_bs_[k]) * sample_fast_fading(fading_rng);
    for (int from = 0; from < pairs_; ++from)
      for (int to = 0; to < pairs_; ++to)
        h.pair_pair(l, from, to) =
            std::sqrt(pair_pair_[from * pairs_ + to]) * sample_fast_fading(fading_rng);
    for (int m = 0; m < cues_; ++m)
      for (int k = 0; k < pairs_; ++k)
        h.cue_pair(l, m, k) = std::sqrt(cue_pair_[m * pairs_ + k]) * sample_fast_fading(fading_rng);
  }
  return h;
}

}  // namespace risv2x
