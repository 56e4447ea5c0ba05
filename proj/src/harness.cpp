#include "risv2x/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "risv2x/errors.hpp"

#ifndef RISV2X_CODE_VERSION
#define RISV2X_CODE_VERSION "unknown"
#endif

namespace risv2x {

namespace {

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  const std::string t = trim(v);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), d);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty())
    throw ConfigError("invalid number for '" + key + "': '" + v + "'");
  return d;
}

long to_long(const std::string& key, const std::string& v) {
  long x = 0;
  const std::string t = trim(v);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty())
    throw ConfigError("invalid integer for '" + key + "': '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& p : split(v, ',')) out.push_back(to_double(key, p));
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += num(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

Vec3 to_vec3(const std::string& key, const std::string& v) {
  const auto d = to_doubles(key, v);
  if (d.size() != 3) throw ConfigError("'" + key + "' needs three comma-separated values");
  return {d[0], d[1], d[2]};
}

std::string vec3(const Vec3& v) { return num(v.x) + "," + num(v.y) + "," + num(v.z); }

PathLossModel to_pathloss(const std::string& key, const std::string& v) {
  const auto d = to_doubles(key, v);
  if (d.size() != 3) throw ConfigError("'" + key + "' needs rho_db,eta,shadow_sigma_db");
  return {d[0], d[1], d[2]};
}

std::string pathloss(const PathLossModel& p) { return num(p.rho_db) + "," + num(p.eta) + "," + num(p.shadow_sigma_db); }

struct Entry {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define RISV2X_DOUBLE(name, field)                                                       \
  Entry {                                                                                \
    name, [](ExperimentConfig& c, const std::string& v) { c.field = to_double(name, v); }, \
        [](const ExperimentConfig& c) { return num(c.field); }                           \
  }
#define RISV2X_INT(name, field, type)                                                               \
  Entry {                                                                                           \
    name, [](ExperimentConfig& c, const std::string& v) { c.field = static_cast<type>(to_long(name, v)); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                           \
  }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      RISV2X_INT("cues", env.cues, int),
      RISV2X_INT("pairs", env.pairs, int),
      RISV2X_INT("ris_elements", env.ris.elements, int),
      RISV2X_INT("ris_active_elements", env.ris_active_elements, int),
      RISV2X_INT("ris_quantization", env.ris.quantization, int),
      RISV2X_DOUBLE("ris_element_spacing_m", env.ris.element_spacing_m),
      {"ris_position", [](ExperimentConfig& c, const std::string& v) { c.env.ris.position = to_vec3("ris_position", v); },
       [](const ExperimentConfig& c) { return vec3(c.env.ris.position); }},
      {"bs_position", [](ExperimentConfig& c, const std::string& v) { c.env.bs = to_vec3("bs_position", v); },
       [](const ExperimentConfig& c) { return vec3(c.env.bs); }},
      {"use_ris", [](ExperimentConfig& c, const std::string& v) { c.env.use_ris = to_bool("use_ris", v); },
       [](const ExperimentConfig& c) { return std::string(c.env.use_ris ? "true" : "false"); }},
      RISV2X_DOUBLE("v2i_power_dbm", env.v2i_power_dbm),
      RISV2X_DOUBLE("v2v_power_min_dbm", env.v2v_power_min_dbm),
      RISV2X_DOUBLE("v2v_power_max_dbm", env.v2v_power_max_dbm),
      RISV2X_DOUBLE("rate_threshold_bps_hz", env.rate_threshold_bps_hz),
      RISV2X_DOUBLE("payload_bits", env.payload_bits),
      RISV2X_INT("steps_per_episode", env.steps_per_episode, int),
      RISV2X_DOUBLE("fast_slot_s", env.fast_slot_s),
      RISV2X_INT("initial_aoi_slots", env.initial_aoi_slots, long),
      RISV2X_DOUBLE("lambda_aoi", env.lambda_aoi),
      RISV2X_DOUBLE("lambda_payload", env.lambda_payload),
      {"terminal_at_horizon",
       [](ExperimentConfig& c, const std::string& v) { c.env.terminal_at_horizon = to_bool("terminal_at_horizon", v); },
       [](const ExperimentConfig& c) { return std::string(c.env.terminal_at_horizon ? "true" : "false"); }},
      RISV2X_DOUBLE("speed_min_mps", env.mobility.speed_min_mps),
      RISV2X_DOUBLE("speed_max_mps", env.mobility.speed_max_mps),
      RISV2X_DOUBLE("turn_probability", env.mobility.turn_probability),
      RISV2X_DOUBLE("antenna_height_m", env.mobility.antenna_height_m),
      RISV2X_DOUBLE("carrier_hz", env.channel.carrier_hz),
      RISV2X_DOUBLE("bandwidth_hz", env.channel.bandwidth_hz),
      RISV2X_DOUBLE("noise_power_dbm", env.channel.noise_power_dbm),
      RISV2X_DOUBLE("bs_noise_figure_db", env.channel.bs_noise_figure_db),
      RISV2X_DOUBLE("vehicle_noise_figure_db", env.channel.vehicle_noise_figure_db),
      RISV2X_DOUBLE("bs_antenna_gain_dbi", env.channel.bs_antenna_gain_dbi),
      RISV2X_DOUBLE("vehicle_antenna_gain_dbi", env.channel.vehicle_antenna_gain_dbi),
      {"pathloss_v2i", [](ExperimentConfig& c, const std::string& v) { c.env.channel.v2i = to_pathloss("pathloss_v2i", v); },
       [](const ExperimentConfig& c) { return pathloss(c.env.channel.v2i); }},
      {"pathloss_v2v", [](ExperimentConfig& c, const std::string& v) { c.env.channel.v2v = to_pathloss("pathloss_v2v", v); },
       [](const ExperimentConfig& c) { return pathloss(c.env.channel.v2v); }},
      {"pathloss_vehicle_ris",
       [](ExperimentConfig& c, const std::string& v) { c.env.channel.vehicle_ris = to_pathloss("pathloss_vehicle_ris", v); },
       [](const ExperimentConfig& c) { return pathloss(c.env.channel.vehicle_ris); }},
      {"pathloss_ris_bs",
       [](ExperimentConfig& c, const std::string& v) { c.env.channel.ris_bs = to_pathloss("pathloss_ris_bs", v); },
       [](const ExperimentConfig& c) { return pathloss(c.env.channel.ris_bs); }},
      RISV2X_DOUBLE("norm_v2i_center_db", env.normalization.v2i_gain_center_db),
      RISV2X_DOUBLE("norm_v2i_scale_db", env.normalization.v2i_gain_scale_db),
      RISV2X_DOUBLE("norm_v2v_center_db", env.normalization.v2v_gain_center_db),
      RISV2X_DOUBLE("norm_v2v_scale_db", env.normalization.v2v_gain_scale_db),
      RISV2X_DOUBLE("norm_interference_center_dbw", env.normalization.interference_center_dbw),
      RISV2X_DOUBLE("norm_interference_scale_db", env.normalization.interference_scale_db),
      {"hidden_layers",
       [](ExperimentConfig& c, const std::string& v) {
         c.sac.hidden.clear();
         for (const auto& p : split(v, ',')) c.sac.hidden.push_back(static_cast<std::size_t>(to_long("hidden_layers", p)));
       },
       [](const ExperimentConfig& c) { return join(c.sac.hidden); }},
      RISV2X_DOUBLE("gamma", sac.gamma),
      RISV2X_DOUBLE("tau", sac.tau),
      RISV2X_DOUBLE("actor_lr", sac.actor_lr),
      RISV2X_DOUBLE("critic_lr", sac.critic_lr),
      RISV2X_DOUBLE("alpha_lr", sac.alpha_lr),
      RISV2X_DOUBLE("initial_alpha", sac.initial_alpha),
      {"target_entropy",
       [](ExperimentConfig& c, const std::string& v) {
         const std::string t = trim(v);
         c.sac.literal_entropy_target = t == "literal";
         c.sac.use_target_entropy_override = !(t == "auto" || t == "literal");
         if (c.sac.use_target_entropy_override) c.sac.target_entropy_override = to_double("target_entropy", t);
       },
       [](const ExperimentConfig& c) {
         if (c.sac.use_target_entropy_override) return num(c.sac.target_entropy_override);
         return std::string(c.sac.literal_entropy_target ? "literal" : "auto");
       }},
      RISV2X_INT("batch_size", sac.batch_size, std::size_t),
      RISV2X_INT("buffer_capacity", sac.buffer_capacity, std::size_t),
      RISV2X_DOUBLE("init_scale", sac.init_scale),
      RISV2X_INT("episodes", episodes, long),
      RISV2X_INT("eval_episodes", eval_episodes, long),
      {"seeds",
       [](ExperimentConfig& c, const std::string& v) {
         c.seeds.clear();
         for (const auto& p : split(v, ',')) {
           const long s = to_long("seeds", p);
           if (s < 0) throw ConfigError("seeds must be non-negative");
           c.seeds.push_back(static_cast<std::uint64_t>(s));
         }
       },
       [](const ExperimentConfig& c) { return join(c.seeds); }},
      {"output_dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = trim(v); },
       [](const ExperimentConfig& c) { return c.output_dir; }},
      {"sweep_axis", [](ExperimentConfig& c, const std::string& v) { c.sweep_axis = parse_axis(trim(v)); },
       [](const ExperimentConfig& c) { return to_string(c.sweep_axis); }},
      {"sweep_values", [](ExperimentConfig& c, const std::string& v) { c.sweep_values = to_doubles("sweep_values", v); },
       [](const ExperimentConfig& c) { return join(c.sweep_values); }},
      {"policy", [](ExperimentConfig& c, const std::string& v) { c.policy = trim(v); },
       [](const ExperimentConfig& c) { return c.policy; }},
      {"checkpoint", [](ExperimentConfig& c, const std::string& v) { c.checkpoint = trim(v); },
       [](const ExperimentConfig& c) { return c.checkpoint; }},
      RISV2X_INT("threads", threads, int),
  };
  return entries;
}

#undef RISV2X_DOUBLE
#undef RISV2X_INT

std::string substitute(std::string s, const std::string& token, const std::string& value) {
  for (auto pos = s.find(token); pos != std::string::npos; pos = s.find(token, pos + value.size()))
    s.replace(pos, token.size(), value);
  return s;
}

int as_count(double v, const char* what) {
  if (v < 0.0 || v != std::floor(v)) throw ConfigError(std::string(what) + " sweep values must be non-negative integers");
  return static_cast<int>(v);
}

struct Accumulator {
  std::vector<EpisodeMetrics> samples;

  static double field(const EpisodeMetrics& m, int i) {
    switch (i) {
      case 0: return m.v2i_sum_rate;
      case 1: return m.v2i_sum_aoi;
      case 2: return m.v2v_delivered;
      case 3: return m.episode_return;
      default: return m.per_user_rate;
    }
  }
  static double& field(EpisodeMetrics& m, int i) {
    switch (i) {
      case 0: return m.v2i_sum_rate;
      case 1: return m.v2i_sum_aoi;
      case 2: return m.v2v_delivered;
      case 3: return m.episode_return;
      default: return m.per_user_rate;
    }
  }

  void summarize(EpisodeMetrics& mean, EpisodeMetrics& ci) const {
    const double n = static_cast<double>(samples.size());
    for (int i = 0; i < 5; ++i) {
      double s = 0.0;
      for (const auto& m : samples) s += field(m, i);
      const double mu = s / n;
      double ss = 0.0;
      for (const auto& m : samples) ss += (field(m, i) - mu) * (field(m, i) - mu);
      field(mean, i) = mu;
      field(ci, i) = n > 1 ? 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    }
  }
};

const char* kSweepHeader =
    "axis,value,seed,policy,episodes,v2i_sum_rate,v2i_sum_rate_ci95,v2i_sum_aoi,v2i_sum_aoi_ci95,"
    "v2v_delivery_prob,v2v_delivery_prob_ci95,mean_return,mean_return_ci95,per_user_rate,per_user_rate_ci95";

const char* kMetricNames[5] = {"v2i_sum_rate", "v2i_sum_aoi", "v2v_delivery_prob", "mean_return", "per_user_rate"};
const bool kHigherIsBetter[5] = {true, false, true, true, true};

}  // namespace

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kV2iPower: return "v2i_power";
    case SweepAxis::kPayload: return "payload_D";
    case SweepAxis::kRisElements: return "ris_elements";
    case SweepAxis::kUserCount: return "user_count";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "v2i_power") return SweepAxis::kV2iPower;
  if (name == "payload_D") return SweepAxis::kPayload;
  if (name == "ris_elements") return SweepAxis::kRisElements;
  if (name == "user_count") return SweepAxis::kUserCount;
  throw ConfigError("unknown sweep axis '" + name + "' (v2i_power, payload_D, ris_elements, user_count)");
}

std::vector<double> ExperimentConfig::axis_values() const {
  if (!sweep_values.empty()) return sweep_values;
  switch (sweep_axis) {
    case SweepAxis::kV2iPower: return {17, 20, 23, 26, 29};
    case SweepAxis::kPayload: return {2 * 1060, 4 * 1060, 8 * 1060, 12 * 1060, 16 * 1060};
    case SweepAxis::kRisElements: return {4, 8, 12, 16, 24};
    case SweepAxis::kUserCount: return {4, 8, 12};
  }
  return {};
}

void ExperimentConfig::validate() const {
  EnvConfig e = env;
  e.validate();
  sac.validate();
  if (episodes < 1) throw ConfigError("episodes must be at least 1");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be at least 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (policy != "sac") parse_baseline(policy);
  if (threads < 0) throw ConfigError("threads must be non-negative");
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  for (const auto& e : registry())
    if (e.key == key) {
      e.set(config, value);
      return;
    }
  throw ConfigError("unknown configuration key '" + key + "'");
}

void apply_config_text(ExperimentConfig& config, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + t + "'");
    apply_setting(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  apply_config_text(base, read_text_file(path));
  return base;
}

std::string dump_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& e : registry()) out += e.key + " = " + e.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& e : registry()) k.push_back(e.key);
  return k;
}

std::string code_version() { return RISV2X_CODE_VERSION; }

EpisodeMetrics run_episode(VehicularEnv& env, std::uint64_t episode_seed, const ActionSource& policy) {
  EpisodeMetrics m;
  std::vector<double> s = env.reset(episode_seed);
  const int M = env.config().cues;
  const int K = env.config().pairs;
  long slots = 0;
  while (!env.done()) {
    const StepOutcome o = env.step(policy(s));
    double v2i = 0.0, v2v = 0.0, aoi = 0.0;
    for (double r : o.metrics.v2i_rate) v2i += r;
    for (double r : o.metrics.v2v_rate) v2v += r;
    for (long a : env.aoi().aoi_slots) aoi += static_cast<double>(a);
    m.v2i_sum_rate += v2i;
    m.v2i_sum_aoi += aoi;
    m.per_user_rate += (v2i + v2v) / (M + K);
    m.episode_return += o.transition.r;
    s = o.transition.s_next;
    ++slots;
  }
  m.v2i_sum_rate /= static_cast<double>(slots);
  m.v2i_sum_aoi /= static_cast<double>(slots);
  m.per_user_rate /= static_cast<double>(slots);
  int delivered = 0;
  for (int k = 0; k < K; ++k) delivered += env.payload().delivered(k) ? 1 : 0;
  m.v2v_delivered = static_cast<double>(delivered) / K;
  return m;
}

EnvConfig sweep_point_env(const ExperimentConfig& config, double value, std::uint64_t seed) {
  EnvConfig e = config.env;
  e.seed = seed;
  switch (config.sweep_axis) {
    case SweepAxis::kV2iPower: e.v2i_power_dbm = value; break;
    case SweepAxis::kPayload:
      if (value < 0.0) throw ConfigError("payload sweep values must be non-negative");
      e.payload_bits = 8.0 * value;
      break;
    case SweepAxis::kRisElements: {
      const int f = as_count(value, "ris_elements");
      if (config.policy == "sac") {
        // One trained policy serves every point; trailing elements are switched off.
        if (f > e.ris.elements) throw DimensionMismatch("ris_elements sweep value vs trained RIS size", e.ris.elements, f);
        e.ris_active_elements = f;
      } else {
        e.ris.elements = f;
        e.ris_active_elements = -1;
      }
      break;
    }
    case SweepAxis::kUserCount: e.pairs = as_count(value, "user_count"); break;
  }
  e.validate();
  return e;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double> values = config.axis_values();
  if (values.empty()) throw ConfigError("sweep has no values");
  const bool sac = config.policy == "sac";
  if (sac && config.checkpoint.empty()) throw ConfigError("policy 'sac' needs a checkpoint");

  struct Job {
    double value;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double v : values)
    for (std::uint64_t s : config.seeds) jobs.push_back({v, s});
  std::vector<SweepRow> rows(jobs.size());

  // Load and check everything up front so that errors surface before any work.
  std::vector<EnvConfig> envs;
  std::vector<std::optional<SacAgent>> agents(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    envs.push_back(sweep_point_env(config, jobs[j].value, jobs[j].seed));
    if (sac) {
      const std::string path = substitute(substitute(config.checkpoint, "{seed}", std::to_string(jobs[j].seed)),
                                          "{value}", num(jobs[j].value));
      agents[j] = SacAgent::load_file(path);
      if (agents[j]->state_dim() != envs[j].state_dim())
        throw DimensionMismatch("checkpoint " + path + " state input vs configuration", agents[j]->state_dim(),
                                envs[j].state_dim());
      if (agents[j]->action_dim() != envs[j].action_dim())
        throw DimensionMismatch("checkpoint " + path + " action output vs configuration", agents[j]->action_dim(),
                                envs[j].action_dim());
    }
  }

  if (config.threads > 0) omp_set_num_threads(config.threads);
  std::vector<std::string> errors(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    try {
      VehicularEnv env(envs[j]);
      ActionSource policy;
      std::optional<BaselinePolicy> baseline;
      Rng unused;
      if (sac) {
        const SacAgent& agent = *agents[j];
        policy = [&agent, &unused](std::span<const double> s) {
          return Action{agent.sample_action(s, unused, true).action, false};
        };
      } else {
        baseline.emplace(parse_baseline(config.policy), envs[j], jobs[j].seed);
        policy = [&baseline](std::span<const double> s) { return baseline->act(s); };
      }
      Accumulator acc;
      for (long e = 0; e < config.eval_episodes; ++e)
        acc.samples.push_back(run_episode(env, kEvalEpisodeOffset + static_cast<std::uint64_t>(e), policy));
      SweepRow& row = rows[j];
      row.axis = to_string(config.sweep_axis);
      row.value = jobs[j].value;
      row.seed = jobs[j].seed;
      row.policy = config.policy;
      row.episodes = config.eval_episodes;
      acc.summarize(row.mean, row.ci95);
    } catch (const std::exception& ex) {
      errors[j] = ex.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("sweep point failed: " + e);
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : rows) {
    out += r.axis + "," + num(r.value) + "," + std::to_string(r.seed) + "," + r.policy + "," +
           std::to_string(r.episodes);
    for (int i = 0; i < 5; ++i)
      out += "," + num(Accumulator::field(r.mean, i)) + "," + num(Accumulator::field(r.ci95, i));
    out += "\n";
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line) != kSweepHeader) throw ConfigError("not a sweep CSV (header mismatch)");
  std::vector<SweepRow> rows;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 15) throw ConfigError("sweep CSV row has " + std::to_string(f.size()) + " fields, expected 15");
    SweepRow r;
    r.axis = f[0];
    r.value = to_double("value", f[1]);
    r.seed = static_cast<std::uint64_t>(to_long("seed", f[2]));
    r.policy = f[3];
    r.episodes = to_long("episodes", f[4]);
    for (int i = 0; i < 5; ++i) {
      Accumulator::field(r.mean, i) = to_double(kMetricNames[i], f[5 + 2 * i]);
      Accumulator::field(r.ci95, i) = to_double(kMetricNames[i], f[6 + 2 * i]);
    }
    rows.push_back(r);
  }
  return rows;
}

std::string rewards_csv(const std::vector<EpisodeLog>& log) {
  std::string out = "episode,return,critic1_loss,critic2_loss,actor_loss,alpha\n";
  for (const auto& l : log)
    out += std::to_string(l.episode) + "," + num(l.episode_return) + "," + num(l.critic1_loss) + "," +
           num(l.critic2_loss) + "," + num(l.actor_loss) + "," + num(l.alpha) + "\n";
  return out;
}

TrainingResult run_training(const ExperimentConfig& config, bool write_files,
                            std::function<void(const EpisodeLog&)> progress) {
  config.validate();
  EnvConfig e = config.env;
  e.seed = config.seed();
  VehicularEnv env(e);
  SacAgent agent(env.state_dim(), env.action_dim(), config.sac, config.seed());
  TrainOptions opts;
  opts.episodes = config.episodes;
  opts.seed = config.seed();
  opts.on_episode = std::move(progress);
  if (write_files) {
    std::filesystem::create_directories(config.output_dir);
    write_manifest(config, "train", config.output_dir);
    opts.fault_checkpoint = config.output_dir + "/checkpoint_last_good.bin";
  }
  TrainingResult result;
  result.log = train(agent, env, opts);
  result.rewards_csv = rewards_csv(result.log);
  if (write_files) {
    write_text_file(config.output_dir + "/rewards.csv", result.rewards_csv);
    agent.save_file(config.output_dir + "/checkpoint.bin");
  }
  return result;
}

std::vector<SweepRow> run_sweep_to_dir(const ExperimentConfig& config) {
  std::vector<SweepRow> rows = run_sweep(config);
  std::filesystem::create_directories(config.output_dir);
  write_manifest(config, "sweep", config.output_dir);
  write_text_file(config.output_dir + "/sweep.csv", sweep_csv(rows));
  return rows;
}

ComparisonTable compare_runs(const std::vector<std::string>& names, const std::vector<std::vector<SweepRow>>& results) {
  if (names.size() != results.size()) throw std::invalid_argument("compare: names and results differ in length");
  if (results.size() < 2) throw ConfigError("compare needs at least two result sets");
  // Per run: (axis, value) -> seed-averaged metrics.
  using Key = std::pair<std::string, double>;
  std::vector<std::map<Key, std::pair<EpisodeMetrics, int>>> agg(results.size());
  for (std::size_t r = 0; r < results.size(); ++r)
    for (const auto& row : results[r]) {
      auto& [m, n] = agg[r][{row.axis, row.value}];
      for (int i = 0; i < 5; ++i) Accumulator::field(m, i) += Accumulator::field(row.mean, i);
      ++n;
    }
  std::set<Key> keys;
  for (const auto& kv : agg[0]) keys.insert(kv.first);
  for (std::size_t r = 1; r < agg.size(); ++r) {
    std::set<Key> other;
    for (const auto& kv : agg[r]) other.insert(kv.first);
    if (other != keys) throw ConfigError("compare: run '" + names[r] + "' has a different sweep axis or values than '" + names[0] + "'");
  }
  ComparisonTable t;
  t.runs = names;
  t.text = "axis,value,metric";
  for (const auto& n : names) t.text += "," + n;
  for (std::size_t r = 1; r < names.size(); ++r) t.text += ",delta_" + names[r];
  for (std::size_t r = 1; r < names.size(); ++r) t.text += ",outcome_" + names[r];
  t.text += "\n";
  for (const auto& key : keys)
    for (int i = 0; i < 5; ++i) {
      std::vector<double> v;
      for (const auto& a : agg) {
        const auto& [m, n] = a.at(key);
        v.push_back(Accumulator::field(m, i) / n);
      }
      t.text += key.first + "," + num(key.second) + "," + kMetricNames[i];
      for (double x : v) t.text += "," + num(x);
      for (std::size_t r = 1; r < v.size(); ++r) t.text += "," + num(v[r] - v[0]);
      for (std::size_t r = 1; r < v.size(); ++r) {
        const double d = kHigherIsBetter[i] ? v[r] - v[0] : v[0] - v[r];
        t.text += d > 0.0 ? ",win" : d < 0.0 ? ",loss" : ",tie";
      }
      t.text += "\n";
    }
  return t;
}

void write_manifest(const ExperimentConfig& config, const std::string& command, const std::string& dir) {
  std::string m = "# run manifest; re-run with: risv2x " + command + " --config manifest.txt\n";
  m += "# command = " + command + "\n";
  m += "# code_version = " + code_version() + "\n";
  m += dump_config(config);
  write_text_file(dir + "/manifest.txt", m);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace risv2x
