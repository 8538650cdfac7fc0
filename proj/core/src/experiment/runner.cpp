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

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "gpbt/experiment.hpp"
#include "json.hpp"

namespace gpbt {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResultsError("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw ResultsError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string curves_csv_header() {
  return "method,seed,generation,epochs_consumed,best_seen_val,best_seen_test,wall_ms\n";
}

std::string curves_csv_rows(const std::string& label, std::uint64_t seed,
                            std::span<const CurvePoint> curve) {
  std::string out;
  for (const auto& p : curve) {
    out += label + ',' + std::to_string(seed) + ',' + std::to_string(p.generation) + ',' +
           std::to_string(p.epochs_consumed) + ',' + format_double(p.best_seen_val) + ',' +
           format_double(p.best_seen_test) + ',' + format_double(p.wall_ms) + '\n';
  }
  return out;
}

RunResult run_cell(const MethodEntry& entry, const ExperimentConfig& config, std::uint64_t seed,
                   bool deterministic, const ProgressCallback& progress) {
  TrainerSpec spec = config.trainer;
  spec.seed = seed;
  auto trainer = make_trainer(spec, config.space);
  RunResult result;
  if (const auto* run_config = std::get_if<RunConfig>(&entry.config)) {
    RunConfig cfg = *run_config;
    cfg.seed = seed;
    cfg.mode = deterministic ? ExecutionMode::deterministic : ExecutionMode::parallel;
    result = entry.method == Method::pooled ? run_pooled_ablation(cfg, config.space, *trainer, progress)
                                            : run(cfg, config.space, *trainer, progress);
  } else if (const auto* pbt = std::get_if<PbtConfig>(&entry.config)) {
    PbtConfig cfg = *pbt;
    cfg.seed = seed;
    result = run_pbt(cfg, config.space, *trainer, progress);
  } else {
    NonadaptiveConfig cfg = std::get<NonadaptiveConfig>(entry.config);
    cfg.seed = seed;
    result = run_nonadaptive(cfg, config.space, *trainer, progress);
  }
  if (auto* external = dynamic_cast<ExternalTrainer*>(trainer.get())) external->shutdown();
  return result;
}

std::string result_json(const CellResult& cell, const MethodEntry& entry,
                        const ExperimentConfig& config) {
  const RunResult& r = cell.result;
  ordered_json j;
  j["method"] = cell.label;
  j["kind"] = to_string(entry.method);
  j["seed"] = cell.seed;
  j["best_agent"] = r.best_agent.value;
  j["best_generation"] = r.tree.size() ? r.tree.at(r.best_agent).generation : 0;
  ordered_json schedule = ordered_json::array();
  for (const auto& hp : r.best_schedule) {
    ordered_json step;
    for (std::size_t i = 0; i < config.space.size(); ++i) step[config.space[i].name] = hp[i];
    schedule.push_back(step);
  }
  j["best_schedule"] = schedule;
  j["best_val_loss"] = r.best_val_loss;
  j["best_test_loss"] = r.best_test_loss;
  j["total_epochs"] = r.total_epochs;
  j["records"] = r.tree.size();
  std::size_t early = 0;
  for (const auto& rec : r.tree.records()) early += rec.early_stopped ? 1 : 0;
  j["early_stopped"] = early;
  j["transfer_ledger"] = r.transfer_ledger;
  j["halted_early"] = r.halted_early;
  ordered_json dyn = ordered_json::array();
  for (const auto& d : r.dynamic_c) {
    dyn.push_back({{"generation", d.generation},
                   {"c_a", d.c_a},
                   {"c_b", d.c_b},
                   {"winner", d.winner},
                   {"mean", d.mean},
                   {"std", d.std}});
  }
  j["dynamic_c"] = dyn;
  ordered_json curve = ordered_json::array();
  for (const auto& p : r.curve) {
    curve.push_back({{"generation", p.generation},
                     {"epochs_consumed", p.epochs_consumed},
                     {"best_seen_val", p.best_seen_val},
                     {"best_seen_test", p.best_seen_test},
                     {"wall_ms", p.wall_ms}});
  }
  j["curve"] = curve;
  j["entry"] = ordered_json::parse(entry_to_json(entry));
  j["config"] = ordered_json::parse(config_to_json(config));
  return j.dump(2) + "\n";
}

namespace {

struct CellJob {
  MethodEntry entry;
  std::uint64_t seed = 0;
};

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("output_dir", "cannot create " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".gpbt-write-probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok") || !out.flush()) {
      throw ConfigError("output_dir", dir.string() + " is not writable");
    }
  }
  fs::remove(probe, ec);
}

void write_cell(const fs::path& out_dir, const CellResult& cell, const MethodEntry& entry,
                const ExperimentConfig& config) {
  const fs::path label_dir = out_dir / cell.label;
  fs::create_directories(label_dir);
  const fs::path final_dir = label_dir / std::to_string(cell.seed);
  const fs::path tmp_dir = label_dir / ("." + std::to_string(cell.seed) + ".tmp");
  fs::remove_all(tmp_dir);
  fs::create_directories(tmp_dir);
  auto put = [&](const char* name, const std::string& contents) {
    std::ofstream out(tmp_dir / name, std::ios::binary | std::ios::trunc);
    if (!out || !(out << contents) || !out.flush()) {
      throw ResultsError("cannot write " + (tmp_dir / name).string());
    }
  };
  put("result.json", result_json(cell, entry, config));
  put("genealogy.ndjson", cell.result.tree.to_ndjson());
  put("curves.csv", curves_csv_header() + curves_csv_rows(cell.label, cell.seed, cell.result.curve));
  fs::remove_all(final_dir);
  fs::rename(tmp_dir, final_dir);
}

std::vector<CellResult> execute(const std::vector<CellJob>& jobs, const ExperimentConfig& config,
                                const RunOptions& options, const fs::path& out_dir) {
  std::vector<CellResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mutex;

  auto log = [&](const std::string& line) {
    if (!options.log) return;
    std::lock_guard lock(mutex);
    options.log(line);
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size() || failed) return;
      const auto& job = jobs[i];
      try {
        const std::string tag = job.entry.label + " seed=" + std::to_string(job.seed);
        auto progress = [&](const CurvePoint& p) {
          log(tag + " gen=" + std::to_string(p.generation) +
              " epochs=" + std::to_string(p.epochs_consumed) +
              " best_val=" + format_double(p.best_seen_val));
        };
        CellResult cell{job.entry.label, job.seed,
                        run_cell(job.entry, config, job.seed, options.deterministic, progress)};
        write_cell(out_dir, cell, job.entry, config);
        results[i] = std::move(cell);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.parallel, jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

std::vector<std::uint64_t> cell_seeds(const ExperimentConfig& config, const RunOptions& options) {
  if (options.seed) return {*options.seed};
  return config.seeds;
}

}  // namespace

std::vector<CellResult> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  ensure_writable(options.out_dir);
  std::vector<CellJob> jobs;
  for (const auto& entry : config.methods) {
    for (auto seed : cell_seeds(config, options)) jobs.push_back({entry, seed});
  }
  auto results = execute(jobs, config, options, options.out_dir);
  std::string combined = curves_csv_header();
  for (const auto& cell : results) combined += curves_csv_rows(cell.label, cell.seed, cell.result.curve);
  write_file_atomic(options.out_dir / "curves.csv", combined);
  return results;
}

std::vector<CellResult> sweep_c(const ExperimentConfig& config, std::span<const double> values,
                                const RunOptions& options) {
  const fs::path out_dir = options.out_dir / "sweep-c";
  ensure_writable(out_dir);
  std::vector<CellJob> jobs;
  std::vector<double> job_c;
  for (const auto& entry : config.methods) {
    const auto* base = std::get_if<RunConfig>(&entry.config);
    if (!base) continue;
    for (double c : values) {
      if (!(c > 0.0) || !c_fits_population(base->n, c)) {
        if (options.log) {
          options.log("warning: c=" + format_double(c) + " does not fit n=" +
                      std::to_string(base->n) + " for " + entry.label + "; skipped");
        }
        continue;
      }
      MethodEntry swept = entry;
      swept.label = entry.label + "-c" + format_double(c);
      std::get<RunConfig>(swept.config).c_policy = FixedC{c};
      for (auto seed : cell_seeds(config, options)) {
        jobs.push_back({swept, seed});
        job_c.push_back(c);
      }
    }
  }
  if (jobs.empty()) throw ConfigError("methods", "no gpbt or pooled entry accepts any c value");
  auto results = execute(jobs, config, options, out_dir);
  std::string combined = "c," + curves_csv_header();
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::istringstream rows(curves_csv_rows(results[i].label, results[i].seed, results[i].result.curve));
    for (std::string line; std::getline(rows, line);) combined += format_double(job_c[i]) + ',' + line + '\n';
  }
  write_file_atomic(out_dir / "curves.csv", combined);
  return results;
}

}  // namespace gpbt
