#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "risv2x/errors.hpp"
#include "risv2x/harness.hpp"

using namespace risv2x;

namespace {

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_file, "key = value configuration file (a manifest works too)");
  cmd->add_option("-s,--set", args.sets, "override, as key=value (repeatable)");
  for (const auto& key : config_keys()) cmd->add_option("--" + key, args.flags[key], "override '" + key + "'");
}

ExperimentConfig resolve(const CommonArgs& args) {
  ExperimentConfig c;
  if (!args.config_file.empty()) c = load_config_file(args.config_file, c);
  for (const auto& [key, value] : args.flags)
    if (!value.empty()) apply_setting(c, key, value);
  for (const auto& kv : args.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-assisted vehicular network simulator with a soft actor-critic allocator"};
  app.require_subcommand(1);

  CommonArgs train_args, sweep_args, dump_args;
  long progress_every = 0;
  auto* train_cmd = app.add_subcommand("train", "train an agent; writes rewards.csv, checkpoint.bin, manifest.txt");
  add_common(train_cmd, train_args);
  train_cmd->add_option("--progress", progress_every, "print a progress line every N episodes");

  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a frozen policy or baseline along one axis; writes sweep.csv");
  add_common(sweep_cmd, sweep_args);

  std::vector<std::string> run_dirs;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "align sweep results of several runs");
  compare_cmd->add_option("runs", run_dirs, "run directories containing sweep.csv")->required()->expected(2, -1);
  compare_cmd->add_option("-o,--output", compare_out, "write the table here instead of stdout");

  auto* dump_cmd = app.add_subcommand("dump-config", "print the effective configuration");
  add_common(dump_cmd, dump_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const ExperimentConfig c = resolve(train_args);
      std::function<void(const EpisodeLog&)> progress;
      if (progress_every > 0)
        progress = [progress_every](const EpisodeLog& l) {
          if ((l.episode + 1) % progress_every == 0)
            std::fprintf(stderr, "episode %ld return %.3f alpha %.4f\n", l.episode + 1, l.episode_return, l.alpha);
        };
      const auto r = run_training(c, true, progress);
      std::cout << "trained " << r.log.size() << " episodes; outputs in " << c.output_dir << "\n";
    } else if (*sweep_cmd) {
      const ExperimentConfig c = resolve(sweep_args);
      const auto rows = run_sweep_to_dir(c);
      std::cout << sweep_csv(rows);
    } else if (*compare_cmd) {
      std::vector<std::string> names;
      std::vector<std::vector<SweepRow>> results;
      for (const auto& d : run_dirs) {
        names.push_back(std::filesystem::path(d).lexically_normal().filename().string());
        if (names.back().empty()) names.back() = std::filesystem::path(d).lexically_normal().parent_path().filename().string();
        results.push_back(parse_sweep_csv(read_text_file(d + "/sweep.csv")));
      }
      const auto t = compare_runs(names, results);
      if (compare_out.empty())
        std::cout << t.text;
      else
        write_text_file(compare_out, t.text);
    } else if (*dump_cmd) {
      std::cout << dump_config(resolve(dump_args));
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
