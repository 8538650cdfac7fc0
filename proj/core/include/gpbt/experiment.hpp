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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gpbt/baselines.hpp"
#include "gpbt/orchestrator.hpp"

namespace gpbt {

enum class Method { gpbt, pbt, nonadaptive, pooled };

std::string_view to_string(Method method) noexcept;
std::optional<Method> parse_method(std::string_view text) noexcept;

using MethodConfig = std::variant<RunConfig, PbtConfig, NonadaptiveConfig>;

struct MethodEntry {
  std::string label;  // unique; names the results directory
  Method method = Method::gpbt;
  MethodConfig config;
};

struct ExperimentConfig {
  std::string name;
  std::vector<MethodEntry> methods;
  std::vector<std::uint64_t> seeds;
  TrainerSpec trainer;
  SearchSpace space;
  std::string output_dir;  // empty: resolved by resolve_output_dir
};

/// Parses and validates a JSON experiment config. Throws ConfigError whose
/// field is a path such as "methods[1].c".
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON of the parsed config with every default filled in.
std::string config_to_json(const ExperimentConfig& config);
std::string entry_to_json(const MethodEntry& entry);

/// --out, then the config's output_dir, then $GPBT_OUT_DIR, then "results".
std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                         const std::optional<std::string>& override_dir);

/// Results are missing or unreadable.
class ResultsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using LogFn = std::function<void(const std::string&)>;

struct RunOptions {
  std::optional<std::uint64_t> seed;  // replaces the config's seeds
  bool deterministic = false;
  std::size_t parallel = 1;  // cells run concurrently
  std::filesystem::path out_dir;
  LogFn log;
};

struct CellResult {
  std::string label;
  std::uint64_t seed = 0;
  RunResult result;
};

/// Runs one method entry for one seed with a fresh trainer.
RunResult run_cell(const MethodEntry& entry, const ExperimentConfig& config, std::uint64_t seed,
                   bool deterministic, const ProgressCallback& progress = {});

/// Runs every (method, seed) cell and writes
/// <out>/<label>/<seed>/{result.json, genealogy.ndjson, curves.csv} plus the
/// combined <out>/curves.csv. Throws ConfigError before any compute when the
/// output directory is not writable. Results are returned in (label, seed) order.
std::vector<CellResult> run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Fixed-c sweep of every gpbt/pooled entry: cells labelled "<label>-c<value>"
/// under <out>/sweep-c, plus <out>/sweep-c/curves.csv keyed by c. Values that
/// do not fit the population are skipped with a warning.
std::vector<CellResult> sweep_c(const ExperimentConfig& config, std::span<const double> values,
                                const RunOptions& options);

std::string result_json(const CellResult& cell, const MethodEntry& entry,
                        const ExperimentConfig& config);
std::string curves_csv_header();
std::string curves_csv_rows(const std::string& label, std::uint64_t seed,
                            std::span<const CurvePoint> curve);

// ---------------------------------------------------------------------------
// Aggregation

struct MethodSummary {
  std::string label;
  std::size_t seeds = 0;
  double median_val = 0.0;
  double iqr_val = 0.0;
  double median_test = 0.0;
  double iqr_test = 0.0;
  double mean_epochs = 0.0;
  std::size_t total_transfers = 0;
};

struct Summary {
  std::vector<MethodSummary> methods;  // ranked by median_val, best first
  /// win_rate[a][b]: fraction of shared seeds where a's final val loss is
  /// below b's, ties counting one half.
  std::map<std::string, std::map<std::string, double>> win_rate;
  std::vector<std::string> warnings;
};

/// Reads the results of every cell of the config under out_dir. Throws
/// ResultsError listing every missing cell.
Summary compare(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                std::span<const std::uint64_t> seeds);
/// Writes summary.csv and summary.json into out_dir.
void write_summary(const Summary& summary, const std::filesystem::path& out_dir);
std::string ranking_table(const Summary& summary);

struct BandPoint {
  std::string method;
  std::size_t epochs = 0;
  double mean_val = 0.0;
  double std_val = 0.0;
  double mean_test = 0.0;
  double std_test = 0.0;
};

/// Mean and sample-std bands over seeds of every method found under
/// results_dir. The grid is the union of the epochs at which any seed
/// reports; each seed contributes its latest point at or before the grid
/// value, and seeds without such a point are left out.
std::vector<BandPoint> plot_bands(const std::filesystem::path& results_dir);
/// Writes <results_dir>/plot_data.csv and returns its path.
std::filesystem::path emit_plot_data(const std::filesystem::path& results_dir);

/// Writes to a temporary sibling, then renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string format_double(double value);

}  // namespace gpbt
