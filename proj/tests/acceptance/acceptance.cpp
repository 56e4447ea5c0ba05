// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Slow criteria train real agents; see README.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "risv2x/baselines.hpp"
#include "risv2x/env.hpp"
#include "risv2x/harness.hpp"
#include "risv2x/phy.hpp"
#include "risv2x/sac.hpp"
#include "support/oracles.hpp"
#include "support/toy_env.hpp"

using namespace risv2x;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path work;
  bool reuse = false;
  std::map<std::uint64_t, std::vector<double>> trained;  // returns of runs finished in this process
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string list(const std::vector<double>& v, const char* f = "%.4f") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s;
}

// ---------------------------------------------------------------- 1
Outcome sinr_oracle(Context&) {
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto h = oracle::random_channels(4, 4, 12, rng);
    const auto a = oracle::random_allocation(4, 4, rng);
    const auto p = oracle::random_phase(12, 8, rng);
    const auto want = oracle::sinr(h, a, p);
    for (int m = 0; m < 4; ++m) worst = std::max(worst, oracle::rel_err(compute_v2i_sinr(h, a, p, m), want.v2i[m]));
    for (int k = 0; k < 4; ++k)
      worst = std::max(worst, oracle::rel_err(compute_v2v_sinr(h, a, p, k).sinr, want.v2v[k]));
  }
  return {worst <= 1e-10, "1000 instances, max relative error " + fmt("%.3g", worst)};
}

// ---------------------------------------------------------------- 2
Outcome no_ris_equivalence(Context&) {
  long compared = 0, mismatched = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    EnvConfig zero;
    zero.seed = seed;
    zero.ris_active_elements = 0;
    EnvConfig direct = zero;
    direct.ris_active_elements = -1;
    direct.use_ris = false;
    VehicularEnv a(zero), b(direct);
    a.reset(seed);
    b.reset(seed);
    BaselinePolicy policy(BaselineKind::kRandomRisRandomRa, zero, seed);
    std::vector<PayloadState> pa, pb;
    while (!a.done()) {
      const Action act = policy.act(a.state());
      const auto x = a.step(act);
      const auto y = b.step(act);
      auto same = [&](const std::vector<double>& u, const std::vector<double>& v) {
        ++compared;
        if (u != v) ++mismatched;
      };
      same(x.metrics.v2i_sinr, y.metrics.v2i_sinr);
      same(x.metrics.v2v_sinr, y.metrics.v2v_sinr);
      same(x.metrics.v2i_rate, y.metrics.v2i_rate);
      same(x.metrics.v2v_rate, y.metrics.v2v_rate);
      same(a.payload().remaining_bits, b.payload().remaining_bits);
      same({x.transition.r}, {y.transition.r});
      ++compared;
      if (a.aoi().aoi_slots != b.aoi().aoi_slots) ++mismatched;
    }
    pa.push_back(a.payload());
    pb.push_back(b.payload());
    ++compared;
    if (delivery_success_rate(pa).aggregate != delivery_success_rate(pb).aggregate) ++mismatched;
  }
  return {mismatched == 0, "3 episodes, " + std::to_string(compared) + " metric vectors compared bit for bit, " +
                               std::to_string(mismatched) + " differ"};
}

// ---------------------------------------------------------------- 3
Outcome aoi_oracle(Context&) {
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> rate(0.0, 6.0);
  std::uniform_int_distribution<int> length(1, 200);
  long steps = 0, mismatched = 0;
  for (int seq = 0; seq < 10000; ++seq) {
    AoiState s;
    s.aoi_slots.assign(4, 100);
    std::vector<long> ref(4, 100);
    const int n = length(rng);
    for (int t = 0; t < n; ++t) {
      std::vector<double> r(4);
      for (auto& x : r) x = (t % 17 == 0) ? 3.0 : rate(rng);
      s = update_aoi(s, r);
      for (int m = 0; m < 4; ++m) {
        ref[m] = oracle::aoi_next(ref[m], r[m], 3.0);
        if (s.aoi_slots[m] != ref[m]) ++mismatched;
      }
      ++steps;
    }
  }
  return {mismatched == 0, "10000 sequences, " + std::to_string(steps) + " steps, " + std::to_string(mismatched) +
                               " mismatches"};
}

// ---------------------------------------------------------------- 4
Batch toy_batch(std::size_t n, std::size_t sdim, std::size_t adim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Batch b;
  b.s.resize(n, sdim);
  b.a.resize(n, adim);
  b.s_next.resize(n, sdim);
  for (double& x : b.s.data) x = g(rng);
  for (double& x : b.a.data) x = std::tanh(g(rng));
  for (double& x : b.s_next.data) x = g(rng);
  for (std::size_t i = 0; i < n; ++i) {
    b.r.push_back(g(rng));
    b.done.push_back(i % 4 == 0 ? 1.0 : 0.0);
  }
  return b;
}

double relative(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

Outcome gradient_checks(Context&) {
  const double h = 1e-6;
  std::mt19937_64 rng(4004);
  SacConfig c;
  c.hidden = {6, 6};
  c.initial_alpha = 0.3;
  SacAgent ag(3, 2, c, 44);
  double worst_actor = 0.0, worst_critic[2] = {0.0, 0.0}, worst_temp = 0.0;

  std::normal_distribution<double> g(0.0, 1.0);
  Matrix s(8, 3), xi(8, 2);
  for (double& x : s.data) x = g(rng);
  for (double& x : xi.data) x = g(rng);
  std::vector<double> ga(ag.actor().parameter_count());
  ag.actor_loss(s, xi, ga);
  std::uniform_int_distribution<std::size_t> pick_a(0, ga.size() - 1);
  for (int probe = 0; probe < 100; ++probe) {
    const std::size_t p = pick_a(rng);
    double& w = ag.actor().params()[p];
    const double keep = w;
    w = keep + h;
    const double up = ag.actor_loss(s, xi, {});
    w = keep - h;
    const double down = ag.actor_loss(s, xi, {});
    w = keep;
    worst_actor = std::max(worst_actor, relative(ga[p], (up - down) / (2 * h)));
  }

  const Batch b = toy_batch(8, 3, 2, rng);
  std::vector<double> y(8);
  for (double& v : y) v = 2.0 * g(rng);
  for (int i = 0; i < 2; ++i) {
    Mlp& net = ag.critic(i);
    std::vector<double> gc(net.parameter_count());
    SacAgent::critic_loss(net, b, y, gc);
    std::uniform_int_distribution<std::size_t> pick(0, gc.size() - 1);
    for (int probe = 0; probe < 100; ++probe) {
      const std::size_t p = pick(rng);
      const double keep = net.params()[p];
      net.params()[p] = keep + h;
      const double up = SacAgent::critic_loss(net, b, y, {});
      net.params()[p] = keep - h;
      const double down = SacAgent::critic_loss(net, b, y, {});
      net.params()[p] = keep;
      worst_critic[i] = std::max(worst_critic[i], relative(gc[p], (up - down) / (2 * h)));
    }
  }

  std::uniform_real_distribution<double> la(-4.0, 1.0), lp(-10.0, 10.0), h0(-20.0, 20.0);
  for (int probe = 0; probe < 100; ++probe) {
    ag.set_log_alpha(la(rng));
    ag.set_target_entropy(h0(rng));
    std::vector<double> logps(16);
    for (double& v : logps) v = lp(rng);
    double grad = 0.0;
    ag.temperature_loss(logps, &grad);
    const double keep = ag.log_alpha();
    ag.set_log_alpha(keep + h);
    const double up = ag.temperature_loss(logps, nullptr);
    ag.set_log_alpha(keep - h);
    const double down = ag.temperature_loss(logps, nullptr);
    ag.set_log_alpha(keep);
    worst_temp = std::max(worst_temp, relative(grad, (up - down) / (2 * h)));
  }
  const double worst = std::max({worst_actor, worst_critic[0], worst_critic[1], worst_temp});
  return {worst < 1e-4, "100 probes each, max relative error actor " + fmt("%.2g", worst_actor) + ", critic1 " +
                            fmt("%.2g", worst_critic[0]) + ", critic2 " + fmt("%.2g", worst_critic[1]) +
                            ", temperature " + fmt("%.2g", worst_temp)};
}

// ---------------------------------------------------------------- 5
Outcome bandit_convergence(Context&) {
  std::vector<double> actions;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    toy::Bandit env;
    SacConfig c;
    c.hidden = {32, 32};
    c.batch_size = 64;
    c.actor_lr = c.critic_lr = c.alpha_lr = 3e-3;
    c.initial_alpha = 0.1;
    c.buffer_capacity = 10000;
    SacAgent ag(1, 1, c, seed);
    TrainOptions o;
    o.episodes = 5000;
    o.seed = seed;
    train(ag, env, o);
    Rng unused(0);
    const double a = ag.sample_action(std::vector<double>{0.0}, unused, true).action[0];
    actions.push_back(a);
    ok = ok && std::abs(a - 0.5) <= 0.05;
  }
  return {ok, "5000 steps, deterministic actions " + list(actions)};
}

// ---------------------------------------------------------------- 6
constexpr std::uint64_t kTrainSeeds[] = {1, 2, 3};

ExperimentConfig desk_profile(const Context& ctx, std::uint64_t seed) {
  ExperimentConfig c;
  c.sac.hidden = {128, 128, 128};
  c.sac.batch_size = 64;
  c.sac.tau = 0.005;
  c.episodes = 300;
  c.seeds = {seed};
  c.output_dir = (ctx.work / ("train_seed" + std::to_string(seed))).string();
  return c;
}

std::vector<double> trained_returns(Context& ctx, std::uint64_t seed) {
  if (auto it = ctx.trained.find(seed); it != ctx.trained.end()) return it->second;
  const ExperimentConfig c = desk_profile(ctx, seed);
  const fs::path dir = c.output_dir;
  if (ctx.reuse && fs::exists(dir / "checkpoint.bin") && fs::exists(dir / "rewards.csv")) {
    std::vector<double> r;
    std::istringstream is(read_text_file((dir / "rewards.csv").string()));
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) r.push_back(std::stod(line.substr(line.find(',') + 1)));
    if (static_cast<long>(r.size()) == c.episodes) return r;
  }
  std::vector<double> r;
  for (const auto& l : run_training(c).log) r.push_back(l.episode_return);
  ctx.trained[seed] = r;
  return r;
}

std::vector<double> baseline_returns(const ExperimentConfig& c, BaselineKind kind) {
  EnvConfig e = c.env;
  e.seed = c.seed();
  VehicularEnv env(e);
  BaselinePolicy policy(kind, e, c.seed());
  std::vector<double> r;
  for (long ep = 0; ep < c.episodes; ++ep)
    r.push_back(run_episode(env, static_cast<std::uint64_t>(ep), [&](std::span<const double> s) {
                  return policy.act(s);
                }).episode_return);
  return r;
}

double tail_mean(const std::vector<double>& v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = v.size() - n; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(n);
}

Outcome training_dominance(Context& ctx) {
  bool ok = true;
  std::string detail = "final-50 mean return (sac / random_ris / no_ris):";
  std::string table = "seed,sac,random_ris_random_ra,no_ris_random_ra\n";
  for (std::uint64_t seed : kTrainSeeds) {
    const ExperimentConfig c = desk_profile(ctx, seed);
    const double sac = tail_mean(trained_returns(ctx, seed), 50);
    const double rr = tail_mean(baseline_returns(c, BaselineKind::kRandomRisRandomRa), 50);
    const double nr = tail_mean(baseline_returns(c, BaselineKind::kNoRisRandomRa), 50);
    ok = ok && sac > rr && sac > nr;
    detail += " seed " + std::to_string(seed) + ": " + fmt("%.2f", sac) + " / " + fmt("%.2f", rr) + " / " +
              fmt("%.2f", nr) + ";";
    table += std::to_string(seed) + "," + fmt("%.4f", sac) + "," + fmt("%.4f", rr) + "," + fmt("%.4f", nr) + "\n";
  }
  write_text_file((ctx.work / "dominance.csv").string(), table);
  return {ok, detail};
}

// ---------------------------------------------------------------- 7-9
std::vector<SweepRow> frozen_sweep(Context& ctx, SweepAxis axis, std::vector<double> values, const std::string& name) {
  for (std::uint64_t seed : kTrainSeeds) trained_returns(ctx, seed);
  ExperimentConfig c = desk_profile(ctx, kTrainSeeds[0]);
  c.policy = "sac";
  c.seeds.assign(std::begin(kTrainSeeds), std::end(kTrainSeeds));
  c.checkpoint = (ctx.work / "train_seed{seed}" / "checkpoint.bin").string();
  c.sweep_axis = axis;
  c.sweep_values = std::move(values);
  c.eval_episodes = 200;
  c.output_dir = (ctx.work / name).string();
  return run_sweep_to_dir(c);
}

// Seed-averaged metric per sweep value, in sweep order.
std::vector<double> by_value(const std::vector<SweepRow>& rows, double EpisodeMetrics::*field) {
  std::vector<double> values, sums;
  std::vector<int> counts;
  for (const auto& r : rows) {
    std::size_t i = 0;
    while (i < values.size() && values[i] != r.value) ++i;
    if (i == values.size()) {
      values.push_back(r.value);
      sums.push_back(0.0);
      counts.push_back(0);
    }
    sums[i] += r.mean.*field;
    ++counts[i];
  }
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] /= counts[i];
  return sums;
}

bool increasing(const std::vector<double>& v, bool strict) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (strict ? !(v[i] > v[i - 1]) : !(v[i] >= v[i - 1])) return false;
  return true;
}

bool decreasing(const std::vector<double>& v, bool strict) {
  std::vector<double> neg;
  for (double x : v) neg.push_back(-x);
  return increasing(neg, strict);
}

Outcome power_trends(Context& ctx) {
  const auto rows = frozen_sweep(ctx, SweepAxis::kV2iPower, {17, 20, 23, 26, 29}, "sweep_v2i_power");
  const auto rate = by_value(rows, &EpisodeMetrics::v2i_sum_rate);
  const auto aoi = by_value(rows, &EpisodeMetrics::v2i_sum_aoi);
  const auto dlv = by_value(rows, &EpisodeMetrics::v2v_delivered);
  const bool a = increasing(rate, true), b = decreasing(aoi, false), c = decreasing(dlv, false);
  return {a && b && c, "V2I power 17..29 dBm: (a) rate " + list(rate) + (a ? " ok" : " NOT increasing") +
                           "; (b) AoI " + list(aoi, "%.3f") + (b ? " ok" : " NOT nonincreasing") + "; (c) delivery " +
                           list(dlv) + (c ? " ok" : " NOT nonincreasing")};
}

Outcome payload_trends(Context& ctx) {
  const auto rows = frozen_sweep(ctx, SweepAxis::kPayload, {2 * 1060, 4 * 1060, 8 * 1060, 12 * 1060, 16 * 1060},
                                 "sweep_payload");
  const auto rate = by_value(rows, &EpisodeMetrics::v2i_sum_rate);
  const auto aoi = by_value(rows, &EpisodeMetrics::v2i_sum_aoi);
  const bool a = decreasing(rate, false), b = increasing(aoi, false);
  return {a && b, "D 2..16 x 1060 bytes: rate " + list(rate) + (a ? " ok" : " NOT nonincreasing") + "; AoI " +
                      list(aoi, "%.3f") + (b ? " ok" : " NOT nondecreasing")};
}

Outcome ris_and_user_trends(Context& ctx) {
  const auto rows = frozen_sweep(ctx, SweepAxis::kRisElements, {0, 4, 8, 12}, "sweep_ris_elements");
  const auto rate = by_value(rows, &EpisodeMetrics::v2i_sum_rate);
  const bool a = increasing(rate, false);

  ExperimentConfig u;
  u.policy = "random_ris_random_ra";
  u.seeds.assign(std::begin(kTrainSeeds), std::end(kTrainSeeds));
  u.sweep_axis = SweepAxis::kUserCount;
  u.sweep_values = {4, 8, 12};
  u.eval_episodes = 200;
  u.output_dir = (ctx.work / "sweep_user_count").string();
  const auto per_user = by_value(run_sweep_to_dir(u), &EpisodeMetrics::per_user_rate);
  const bool b = per_user.back() < per_user.front();
  return {a && b, "F 0,4,8,12 (trained, masked): rate " + list(rate, "%.6f") + (a ? " ok" : " NOT nondecreasing") +
                      "; per-user rate at K=4,8,12: " + list(per_user) + (b ? " ok" : " NOT decreasing")};
}

// ---------------------------------------------------------------- 10
int run_cli(const std::string& args) {
  const std::string cmd = std::string(RISV2X_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome manifest_determinism(Context& ctx) {
  const fs::path train = ctx.work / "det_train", sweep = ctx.work / "det_sweep", keep = ctx.work / "det_first";
  fs::remove_all(train);
  fs::remove_all(sweep);
  fs::remove_all(keep);
  fs::create_directories(keep);
  if (run_cli("train --episodes 4 --hidden_layers 16,16 --batch_size 32 --seeds 7 --output_dir " + train.string()) !=
      0)
    return {false, "initial training run failed"};
  if (run_cli("sweep --policy sac --checkpoint " + (train / "checkpoint.bin").string() +
              " --sweep_axis payload_D --sweep_values 2120,8480 --seeds 7 --eval_episodes 5 --output_dir " +
              sweep.string()) != 0)
    return {false, "initial sweep failed"};
  const std::vector<fs::path> outputs = {train / "rewards.csv", train / "checkpoint.bin", sweep / "sweep.csv"};
  for (std::size_t i = 0; i < outputs.size(); ++i) fs::copy_file(outputs[i], keep / std::to_string(i));

  if (run_cli("train --config " + (train / "manifest.txt").string()) != 0) return {false, "training rerun failed"};
  if (run_cli("sweep --config " + (sweep / "manifest.txt").string()) != 0) return {false, "sweep rerun failed"};
  int identical = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i)
    identical += read_text_file(outputs[i].string()) == read_text_file((keep / std::to_string(i)).string());
  return {identical == static_cast<int>(outputs.size()),
          "reran train and sweep from manifest.txt: " + std::to_string(identical) + "/" +
              std::to_string(outputs.size()) + " outputs byte-identical (rewards.csv, checkpoint.bin, sweep.csv)"};
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome(Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  Context ctx;
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work", work, "scratch directory for training runs and sweeps");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  std::vector<int> expected_failures;
  app.add_option("--expect-fail", expected_failures, "criteria known to fail; they do not set the exit code")
      ->delimiter(',');
  app.add_flag("--reuse", ctx.reuse, "reuse finished training runs found in the work directory");
  CLI11_PARSE(app, argc, argv);
  ctx.work = fs::absolute(work);
  fs::create_directories(ctx.work);

  const std::vector<Criterion> criteria = {
      {1, "SINR oracle equivalence", sinr_oracle},
      {2, "no-RIS equivalence", no_ris_equivalence},
      {3, "AoI recursion oracle", aoi_oracle},
      {4, "gradient checks", gradient_checks},
      {5, "SAC bandit convergence", bandit_convergence},
      {6, "training dominance over baselines", training_dominance},
      {7, "V2I power trends", power_trends},
      {8, "payload trends", payload_trends},
      {9, "RIS size and user count trends", ris_and_user_trends},
      {10, "manifest determinism", manifest_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool expected = std::find(expected_failures.begin(), expected_failures.end(), c.id) !=
                          expected_failures.end();
    failures += o.pass || expected ? 0 : 1;
    std::printf("%s criterion %d (%s): %s [%.1f s]%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs,
                expected ? (o.pass ? " (listed as expected failure)" : " (expected failure)") : "");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
