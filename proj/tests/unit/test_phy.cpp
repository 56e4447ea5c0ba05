#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "risv2x/errors.hpp"
#include "risv2x/phy.hpp"

using namespace risv2x;

namespace {

ChannelRealization scalar_channels(int M, int K) {
  ChannelRealization h(M, K, M, 0);
  h.noise_bs_w = 1e-3;
  h.noise_vehicle_w = 2e-3;
  return h;
}

PhaseShiftConfig no_ris() { return PhaseShiftConfig::zeros(0, 8); }

}  // namespace

TEST_CASE("interference-free V2I link") {
  ChannelRealization h = scalar_channels(2, 1);
  h.cue_bs(0, 0) = {0.3, 0.4};
  AllocationState a{{1}, {0.5}, 0.2};
  CHECK(compute_v2i_sinr(h, a, no_ris(), 0) == doctest::Approx(0.2 * 0.25 / 1e-3).epsilon(1e-14));
}

TEST_CASE("V2I link with one equal-gain sharer") {
  ChannelRealization h = scalar_channels(1, 1);
  h.cue_bs(0, 0) = {1.0, 0.0};
  h.pair_bs(0, 0) = {0.0, 1.0};
  AllocationState a{{0}, {0.2}, 0.2};
  CHECK(compute_v2i_sinr(h, a, no_ris(), 0) == doctest::Approx(0.2 / (0.2 + 1e-3)).epsilon(1e-14));
}

TEST_CASE("single V2V pair without co-channel users") {
  ChannelRealization h = scalar_channels(1, 1);
  h.pair_pair(0, 0, 0) = {2.0, 0.0};
  AllocationState a{{0}, {0.1}, 0.0};
  const V2vSinr s = compute_v2v_sinr(h, a, no_ris(), 0);
  CHECK(s.sinr == doctest::Approx(0.1 * 4.0 / 2e-3).epsilon(1e-14));
  CHECK(s.interference_w == 0.0);
}

TEST_CASE("V2V interference reduces to the CUE term without co-channel pairs") {
  ChannelRealization h = scalar_channels(2, 2);
  h.cue_pair(0, 0, 0) = {0.5, 0.0};
  h.pair_pair(0, 1, 0) = {9.0, 0.0};  // pair 1 sits on the other channel
  AllocationState a{{0, 1}, {0.1, 0.1}, 0.2};
  CHECK(compute_v2v_sinr(h, a, no_ris(), 0).interference_w == doctest::Approx(0.2 * 0.25).epsilon(1e-14));
}

TEST_CASE("SINRs match the brute-force evaluation on random instances") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const ChannelRealization h = oracle::random_channels(4, 4, 12, rng);
    const AllocationState a = oracle::random_allocation(4, 4, rng);
    const PhaseShiftConfig p = oracle::random_phase(12, 8, rng);
    const auto want = oracle::sinr(h, a, p);
    for (int m = 0; m < 4; ++m) CHECK(oracle::rel_err(compute_v2i_sinr(h, a, p, m), want.v2i[m]) <= 1e-12);
    for (int k = 0; k < 4; ++k) CHECK(oracle::rel_err(compute_v2v_sinr(h, a, p, k).sinr, want.v2v[k]) <= 1e-12);
  }
}

TEST_CASE("zero RIS amplitudes reproduce the direct-only path exactly") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const ChannelRealization h = oracle::random_channels(4, 4, 12, rng);
    const AllocationState a = oracle::random_allocation(4, 4, rng);
    PhaseShiftConfig p = oracle::random_phase(12, 8, rng);
    for (auto& b : p.amplitude) b = 0.0;
    const LinkMetrics x = compute_link_metrics(h, a, p);
    const LinkMetrics y = compute_link_metrics_direct(h, a);
    CHECK(x.v2i_sinr == y.v2i_sinr);
    CHECK(x.v2v_sinr == y.v2v_sinr);
    CHECK(x.v2i_rate == y.v2i_rate);
    CHECK(x.v2v_rate == y.v2v_rate);
    CHECK(x.v2v_interference == y.v2v_interference);
  }
}

TEST_CASE("raising V2I power raises V2I SINR and lowers co-channel V2V SINR") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const ChannelRealization h = oracle::random_channels(4, 4, 12, rng);
    AllocationState a = oracle::random_allocation(4, 4, rng);
    const PhaseShiftConfig p = oracle::random_phase(12, 8, rng);
    const LinkMetrics lo = compute_link_metrics(h, a, p);
    a.v2i_power_w *= 2.0;
    const LinkMetrics hi = compute_link_metrics(h, a, p);
    for (int m = 0; m < 4; ++m) CHECK(hi.v2i_sinr[m] > lo.v2i_sinr[m]);
    for (int k = 0; k < 4; ++k) CHECK(hi.v2v_sinr[k] <= lo.v2v_sinr[k]);
  }
}

TEST_CASE("rates round-trip through SINR") {
  for (double s : {0.0, 1e-6, 0.5, 3.0, 1e4}) {
    const double r = rate_from_sinr(s);
    CHECK(r == std::log2(1.0 + s));
    CHECK(std::pow(2.0, r) - 1.0 == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("AoI resets on success and grows otherwise") {
  AoiState s;
  s.aoi_slots = {5, 5, 5};
  const std::vector<double> rates{3.2, 2.9, 3.0};
  const AoiState n = update_aoi(s, rates);
  CHECK(n.aoi_slots[0] == 1);
  CHECK(n.aoi_slots[1] == 6);
  CHECK(n.aoi_slots[2] == 1);
}

TEST_CASE("AoI matches the literal recursion on random rate sequences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> r(0.0, 6.0);
  AoiState s;
  s.aoi_slots.assign(4, 100);
  std::vector<long> ref(4, 100);
  for (int n = 0; n < 10000; ++n) {
    std::vector<double> rates(4);
    for (auto& x : rates) x = (n % 7 == 0) ? 3.0 : r(rng);
    s = update_aoi(s, rates);
    for (int m = 0; m < 4; ++m) {
      ref[m] = oracle::aoi_next(ref[m], rates[m], 3.0);
      REQUIRE(s.aoi_slots[m] == ref[m]);
    }
  }
}

TEST_CASE("payload bookkeeping") {
  PayloadState p;
  p.remaining_bits = {8480.0, 0.0};
  p.initial_bits = 8480.0;
  const std::vector<double> rates{4.0, 5.0};
  const PayloadState n = update_payload(p, rates, 1e6, 1e-3);
  CHECK(n.remaining_bits[0] == doctest::Approx(4480.0));
  CHECK(n.remaining_bits[1] == 0.0);
  CHECK(n.delivered(1));
  CHECK(n.elapsed_slots == 1);
}

TEST_CASE("payload decrements telescope and the budget is enforced") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> r(0.0, 0.8);
  PayloadState p;
  p.remaining_bits = {67840.0};
  p.budget_slots = 100;
  double sent = 0.0;
  for (int n = 0; n < 100; ++n) {
    const double before = p.remaining_bits[0];
    const std::vector<double> rates{r(rng)};
    p = update_payload(p, rates, 1e6, 1e-3);
    CHECK(p.remaining_bits[0] <= before);
    sent += before - p.remaining_bits[0];
  }
  CHECK(sent == doctest::Approx(67840.0 - p.remaining_bits[0]));
  CHECK_THROWS_AS(update_payload(p, std::vector<double>{1.0}, 1e6, 1e-3), ProtocolError);
}

TEST_CASE("delivery success rate counts delivered pairs") {
  PayloadState a, b;
  a.remaining_bits = {0.0, 0.0};
  b.remaining_bits = {0.0, 10.0};
  const std::vector<PayloadState> all{a, a};
  const std::vector<PayloadState> mixed{a, b};
  PayloadState none;
  none.remaining_bits = {1.0, 1.0};
  const std::vector<PayloadState> nothing{none};
  CHECK(delivery_success_rate(all).aggregate == 1.0);
  CHECK(delivery_success_rate(mixed).aggregate == 0.75);
  CHECK(delivery_success_rate(mixed).per_pair[1] == 0.5);
  CHECK(delivery_success_rate(nothing).aggregate == 0.0);
  CHECK_THROWS(delivery_success_rate(std::span<const PayloadState>{}));
}

TEST_CASE("allocation validation") {
  AllocationState a{{4}, {0.1}, 0.2};
  CHECK_THROWS(a.validate(4));
  AllocationState b{{0}, {-1.0}, 0.2};
  CHECK_THROWS(b.validate(4));
}
