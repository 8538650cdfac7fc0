// Copyright 2026 The GPBT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// gpbt: run, compare and sweep experiments from a JSON config.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpbt/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTrainer = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::size_t parallel = 1;
  std::optional<std::string> out;
};

gpbt::RunOptions options_for(const Common& c, const gpbt::ExperimentConfig& config) {
  gpbt::RunOptions o;
  o.seed = c.seed;
  o.deterministic = c.deterministic;
  o.parallel = c.parallel;
  o.out_dir = gpbt::resolve_output_dir(config, c.out);
  o.log = [](const std::string& line) { std::cerr << line << '\n'; };
  return o;
}

void add_run_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config, "Experiment config (JSON)")->required();
  cmd->add_option("--seed", c.seed, "Run this seed instead of the config's seeds");
  cmd->add_flag("--deterministic", c.deterministic, "Sequential, bit-reproducible execution");
  cmd->add_option("--parallel", c.parallel, "Cells run concurrently")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output directory (default: config, then $GPBT_OUT_DIR)");
}

int cmd_run(const Common& c) {
  const auto config = gpbt::load_config(c.config);
  const auto options = options_for(c, config);
  const auto cells = gpbt::run_experiment(config, options);
  for (const auto& cell : cells) {
    std::cout << cell.label << " seed=" << cell.seed
              << " best_val=" << gpbt::format_double(cell.result.best_val_loss)
              << " best_test=" << gpbt::format_double(cell.result.best_test_loss)
              << " epochs=" << cell.result.total_epochs << '\n';
  }
  std::cout << "results written to " << options.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_compare(const Common& c) {
  const auto config = gpbt::load_config(c.config);
  const auto out = gpbt::resolve_output_dir(config, c.out);
  std::vector<std::uint64_t> seeds = c.seed ? std::vector<std::uint64_t>{*c.seed} : config.seeds;
  const auto summary = gpbt::compare(config, out, seeds);
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
  gpbt::write_summary(summary, out);
  std::cout << gpbt::ranking_table(summary);
  return kExitOk;
}

int cmd_sweep(const Common& c, const std::vector<double>& values) {
  const auto config = gpbt::load_config(c.config);
  const auto options = options_for(c, config);
  const auto cells = gpbt::sweep_c(config, values, options);
  std::cout << cells.size() << " sweep runs written to "
            << (options.out_dir / "sweep-c").string() << '\n';
  return kExitOk;
}

int cmd_plot(const std::string& dir) {
  std::cout << gpbt::emit_plot_data(dir).string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Genealogical population-based training experiments"};
  app.require_subcommand(1);

  Common run_args;
  auto* run = app.add_subcommand("run", "Run every (method, seed) cell of a config");
  add_run_flags(run, run_args);

  Common compare_args;
  auto* compare = app.add_subcommand("compare", "Summarize existing results of a config");
  compare->add_option("config", compare_args.config, "Experiment config (JSON)")->required();
  compare->add_option("--seed", compare_args.seed, "Compare this seed only");
  compare->add_option("--out", compare_args.out, "Results directory");

  Common sweep_args;
  std::vector<double> values{0.125, 0.25, 0.5, 1, 2, 4, 8};
  auto* sweep = app.add_subcommand("sweep-c", "Fixed-c sweep of the config's GPBT entries");
  add_run_flags(sweep, sweep_args);
  sweep->add_option("--values", values, "Comma-separated c values")->delimiter(',');

  std::string plot_dir;
  auto* plot = app.add_subcommand("emit-plot-data", "Write mean/std bands per method over epochs");
  plot->add_option("results-dir", plot_dir, "Results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*compare) return cmd_compare(compare_args);
    if (*sweep) return cmd_sweep(sweep_args, values);
    if (*plot) return cmd_plot(plot_dir);
  } catch (const gpbt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gpbt::TrainerError& e) {
    std::cerr << "trainer failure: " << e.what() << '\n';
    return kExitTrainer;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
