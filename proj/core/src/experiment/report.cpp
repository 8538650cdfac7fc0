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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gpbt/experiment.hpp"
#include "gpbt/stats.hpp"
#include "json.hpp"

namespace gpbt {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResultsError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CellFinal {
  double val = 0.0;
  double test = 0.0;
  double epochs = 0.0;
  std::size_t transfers = 0;
};

double iqr(std::span<const double> xs) {
  return stats::quantile_linear(xs, 0.75) - stats::quantile_linear(xs, 0.25);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_seed_dir(const fs::directory_entry& e) {
  const std::string name = e.path().filename().string();
  return e.is_directory() && !name.empty() &&
         std::all_of(name.begin(), name.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) &&
         fs::exists(e.path() / "curves.csv");
}

struct SeedCurve {
  std::vector<std::size_t> epochs;
  std::vector<double> val;
  std::vector<double> test;
};

SeedCurve read_curve(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ResultsError(path.string() + " is empty");
  const auto header = split_csv(line);
  auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ResultsError(path.string() + " lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ce = column("epochs_consumed");
  const std::size_t cv = column("best_seen_val");
  const std::size_t ct = column("best_seen_test");
  SeedCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw ResultsError(path.string() + ": malformed row '" + line + "'");
    try {
      curve.epochs.push_back(std::stoull(f[ce]));
      curve.val.push_back(std::stod(f[cv]));
      curve.test.push_back(std::stod(f[ct]));
    } catch (const std::exception&) {
      throw ResultsError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return curve;
}

}  // namespace

Summary compare(const ExperimentConfig& config, const fs::path& out_dir,
                std::span<const std::uint64_t> seeds) {
  std::vector<std::string> missing;
  std::map<std::string, std::vector<CellFinal>> finals;
  for (const auto& entry : config.methods) {
    auto& cells = finals[entry.label];
    for (auto seed : seeds) {
      const fs::path file = out_dir / entry.label / std::to_string(seed) / "result.json";
      if (!fs::exists(file)) {
        missing.push_back(entry.label + "/" + std::to_string(seed));
        continue;
      }
      try {
        const json j = json::parse(read_file(file));
        CellFinal c;
        c.val = j.at("best_val_loss").get<double>();
        c.test = j.at("best_test_loss").get<double>();
        c.epochs = j.at("total_epochs").get<double>();
        for (const auto& t : j.at("transfer_ledger")) c.transfers += t.get<std::size_t>();
        cells.push_back(c);
      } catch (const json::exception& e) {
        throw ResultsError("malformed " + file.string() + ": " + e.what());
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing results for:";
    for (const auto& m : missing) msg += " " + m;
    throw ResultsError(msg);
  }

  Summary summary;
  if (seeds.size() == 1) summary.warnings.push_back("single seed: IQR reported as 0");
  for (const auto& entry : config.methods) {
    const auto& cells = finals[entry.label];
    std::vector<double> val, test, epochs;
    MethodSummary s;
    s.label = entry.label;
    s.seeds = cells.size();
    for (const auto& c : cells) {
      val.push_back(c.val);
      test.push_back(c.test);
      epochs.push_back(c.epochs);
      s.total_transfers += c.transfers;
    }
    s.median_val = stats::median(val);
    s.median_test = stats::median(test);
    s.iqr_val = cells.size() > 1 ? iqr(val) : 0.0;
    s.iqr_test = cells.size() > 1 ? iqr(test) : 0.0;
    s.mean_epochs = stats::mean(epochs);
    summary.methods.push_back(s);
  }
  for (const auto& a : config.methods) {
    for (const auto& b : config.methods) {
      const auto& fa = finals[a.label];
      const auto& fb = finals[b.label];
      double wins = 0.0;
      for (std::size_t i = 0; i < fa.size(); ++i) {
        if (fa[i].val < fb[i].val) wins += 1.0;
        else if (fa[i].val == fb[i].val) wins += 0.5;
      }
      summary.win_rate[a.label][b.label] = wins / static_cast<double>(fa.size());
    }
  }
  std::stable_sort(summary.methods.begin(), summary.methods.end(),
                   [](const MethodSummary& x, const MethodSummary& y) {
                     return x.median_val < y.median_val;
                   });
  return summary;
}

void write_summary(const Summary& summary, const fs::path& out_dir) {
  std::string csv = "rank,method,seeds,median_val,iqr_val,median_test,iqr_test,mean_epochs,total_transfers";
  for (const auto& m : summary.methods) csv += ",win_vs_" + m.label;
  csv += '\n';
  ordered_json methods = ordered_json::array();
  std::size_t rank = 1;
  for (const auto& m : summary.methods) {
    csv += std::to_string(rank) + ',' + m.label + ',' + std::to_string(m.seeds) + ',' +
           format_double(m.median_val) + ',' + format_double(m.iqr_val) + ',' +
           format_double(m.median_test) + ',' + format_double(m.iqr_test) + ',' +
           format_double(m.mean_epochs) + ',' + std::to_string(m.total_transfers);
    for (const auto& other : summary.methods) {
      csv += ',' + format_double(summary.win_rate.at(m.label).at(other.label));
    }
    csv += '\n';
    methods.push_back({{"rank", rank},
                       {"method", m.label},
                       {"seeds", m.seeds},
                       {"median_val", m.median_val},
                       {"iqr_val", m.iqr_val},
                       {"median_test", m.median_test},
                       {"iqr_test", m.iqr_test},
                       {"mean_epochs", m.mean_epochs},
                       {"total_transfers", m.total_transfers}});
    ++rank;
  }
  ordered_json win = ordered_json::object();
  for (const auto& m : summary.methods) {
    ordered_json row = ordered_json::object();
    for (const auto& other : summary.methods) row[other.label] = summary.win_rate.at(m.label).at(other.label);
    win[m.label] = row;
  }
  ordered_json j;
  j["methods"] = methods;
  j["win_rate"] = win;
  j["warnings"] = summary.warnings;
  write_file_atomic(out_dir / "summary.csv", csv);
  write_file_atomic(out_dir / "summary.json", j.dump(2) + "\n");
}

std::string ranking_table(const Summary& summary) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-24s %5s %14s %12s %14s %10s\n", "rank", "method",
                "seeds", "median_val", "iqr_val", "median_test", "epochs");
  out += line;
  std::size_t rank = 1;
  for (const auto& m : summary.methods) {
    std::snprintf(line, sizeof line, "%-4zu %-24s %5zu %14.6g %12.4g %14.6g %10.1f\n", rank++,
                  m.label.c_str(), m.seeds, m.median_val, m.iqr_val, m.median_test,
                  m.mean_epochs);
    out += line;
  }
  return out;
}

std::vector<BandPoint> plot_bands(const fs::path& results_dir) {
  if (!fs::is_directory(results_dir)) throw ResultsError(results_dir.string() + " is not a directory");
  std::vector<fs::path> method_dirs;
  for (const auto& e : fs::directory_iterator(results_dir)) {
    if (e.is_directory() && e.path().filename().string().front() != '.') method_dirs.push_back(e.path());
  }
  std::sort(method_dirs.begin(), method_dirs.end());

  std::vector<BandPoint> bands;
  for (const auto& dir : method_dirs) {
    std::vector<fs::path> seed_dirs;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (is_seed_dir(e)) seed_dirs.push_back(e.path());
    }
    if (seed_dirs.empty()) continue;
    std::sort(seed_dirs.begin(), seed_dirs.end(), [](const fs::path& a, const fs::path& b) {
      return std::stoull(a.filename().string()) < std::stoull(b.filename().string());
    });
    std::vector<SeedCurve> curves;
    std::set<std::size_t> grid;
    for (const auto& s : seed_dirs) {
      curves.push_back(read_curve(s / "curves.csv"));
      grid.insert(curves.back().epochs.begin(), curves.back().epochs.end());
    }
    const std::string method = dir.filename().string();
    for (std::size_t x : grid) {
      std::vector<double> val, test;
      for (const auto& c : curves) {
        const auto it = std::upper_bound(c.epochs.begin(), c.epochs.end(), x);
        if (it == c.epochs.begin()) continue;
        const auto k = static_cast<std::size_t>(it - c.epochs.begin()) - 1;
        val.push_back(c.val[k]);
        test.push_back(c.test[k]);
      }
      BandPoint p;
      p.method = method;
      p.epochs = x;
      p.mean_val = stats::mean(val);
      p.mean_test = stats::mean(test);
      p.std_val = val.size() > 1 ? stats::sample_std(val) : 0.0;
      p.std_test = test.size() > 1 ? stats::sample_std(test) : 0.0;
      bands.push_back(p);
    }
  }
  if (bands.empty()) throw ResultsError("no results found under " + results_dir.string());
  return bands;
}

fs::path emit_plot_data(const fs::path& results_dir) {
  std::string csv = "method,epochs,mean_val,std_val,mean_test,std_test\n";
  for (const auto& p : plot_bands(results_dir)) {
    csv += p.method + ',' + std::to_string(p.epochs) + ',' + format_double(p.mean_val) + ',' +
           format_double(p.std_val) + ',' + format_double(p.mean_test) + ',' +
           format_double(p.std_test) + '\n';
  }
  const fs::path out = results_dir / "plot_data.csv";
  write_file_atomic(out, csv);
  return out;
}

}  // namespace gpbt
