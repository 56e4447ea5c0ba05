#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "risv2x/baselines.hpp"
#include "risv2x/env.hpp"
#include "risv2x/sac.hpp"

namespace risv2x {

enum class SweepAxis { kV2iPower, kPayload, kRisElements, kUserCount };

std::string to_string(SweepAxis axis);
SweepAxis parse_axis(const std::string& name);

struct ExperimentConfig {
  EnvConfig env;
  SacConfig sac;
  long episodes = 1000;
  long eval_episodes = 200;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "runs/default";
  SweepAxis sweep_axis = SweepAxis::kV2iPower;
  std::vector<double> sweep_values;  // empty: axis default
  std::string policy = "sac";        // sac | random_ris_random_ra | no_ris_random_ra
  // Checkpoint path for sweeps; "{seed}" and "{value}" are substituted.
  std::string checkpoint;
  int threads = 0;  // 0: OpenMP default

  std::uint64_t seed() const { return seeds.front(); }
  std::vector<double> axis_values() const;
  void validate() const;
};

/// Plain-text "key = value" configuration. Lines starting with '#' are
/// comments. Unknown keys raise ConfigError naming the key.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
void apply_config_text(ExperimentConfig& config, const std::string& text);
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});
std::string dump_config(const ExperimentConfig& config);
std::vector<std::string> config_keys();

std::string code_version();

struct EpisodeMetrics {
  double v2i_sum_rate = 0.0;   // per-slot mean of sum_m R_m
  double v2i_sum_aoi = 0.0;    // per-slot mean of sum_m A_m
  double v2v_delivered = 0.0;  // fraction of pairs that delivered D
  double episode_return = 0.0;
  double per_user_rate = 0.0;  // per-slot mean of (sum R_m + sum R_k) / (M + K)
};

/// Runs one episode with the given action source.
using ActionSource = std::function<Action(std::span<const double> state)>;
EpisodeMetrics run_episode(VehicularEnv& env, std::uint64_t episode_seed, const ActionSource& policy);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string policy;
  long episodes = 0;
  EpisodeMetrics mean;
  EpisodeMetrics ci95;  // half-widths
};

/// Seed offset keeping evaluation episodes disjoint from training episodes.
constexpr std::uint64_t kEvalEpisodeOffset = 1'000'000'000ULL;

/// Environment configuration for one sweep point.
EnvConfig sweep_point_env(const ExperimentConfig& config, double value, std::uint64_t seed);

std::vector<SweepRow> run_sweep(const ExperimentConfig& config);
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

struct TrainingResult {
  std::vector<EpisodeLog> log;
  std::string rewards_csv;
};

/// Trains one agent with config.seed(); writes rewards.csv, checkpoint.bin
/// and manifest.txt under output_dir when `write_files` is set.
TrainingResult run_training(const ExperimentConfig& config, bool write_files = true,
                            std::function<void(const EpisodeLog&)> progress = {});
std::string rewards_csv(const std::vector<EpisodeLog>& log);

/// Evaluates all sweep points and writes sweep.csv plus manifest.txt.
std::vector<SweepRow> run_sweep_to_dir(const ExperimentConfig& config);

struct ComparisonTable {
  std::vector<std::string> runs;
  std::string text;  // CSV
};

/// Aligns sweep results across runs; the first run is the reference for deltas.
ComparisonTable compare_runs(const std::vector<std::string>& names,
                             const std::vector<std::vector<SweepRow>>& results);

void write_manifest(const ExperimentConfig& config, const std::string& command, const std::string& dir);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace risv2x
