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

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "gpbt/experiment.hpp"
#include "json.hpp"

namespace gpbt {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::gpbt:
      return "gpbt";
    case Method::pbt:
      return "pbt";
    case Method::nonadaptive:
      return "nonadaptive";
    case Method::pooled:
      return "pooled";
  }
  return "gpbt";
}

std::optional<Method> parse_method(std::string_view text) noexcept {
  if (text == "gpbt") return Method::gpbt;
  if (text == "pbt") return Method::pbt;
  if (text == "nonadaptive") return Method::nonadaptive;
  if (text == "pooled") return Method::pooled;
  return std::nullopt;
}

namespace {

std::string join(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

// Typed access to one JSON object, reporting errors by field path.
class Fields {
 public:
  Fields(const json& obj, std::string path, std::initializer_list<std::string_view> allowed)
      : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "must be an object");
    for (const auto& [key, value] : obj.items()) {
      bool known = false;
      for (auto a : allowed) known = known || a == key;
      if (!known) throw ConfigError(join(path_, key), "unknown field");
    }
  }

  const std::string& path() const { return path_; }
  std::string field(std::string_view key) const { return join(path_, key); }
  bool has(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }
  const json& raw(const char* key) const { return obj_.at(key); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
    return x;
  }

  std::size_t count(const char* key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(field(key), "must be a non-negative integer");
    }
    return v.get<std::size_t>();
  }

  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!obj_.at(key).is_boolean()) throw ConfigError(field(key), "must be true or false");
    return obj_.at(key).get<bool>();
  }

  std::string text(const char* key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!obj_.at(key).is_string()) throw ConfigError(field(key), "must be a string");
    return obj_.at(key).get<std::string>();
  }

  std::string required_text(const char* key) const {
    if (!has(key)) throw ConfigError(field(key), "is required");
    return text(key, "");
  }

 private:
  const json& obj_;
  std::string path_;
};

// Rethrows a ConfigError raised by a validator with `base` prefixed to its field.
template <class F>
void with_prefix(const std::string& base, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    const std::string message = what.substr(std::min(what.size(), e.field().size() + 2));
    throw ConfigError(join(base, e.field()), message);
  }
}

SearchSpace parse_space(const json& root) {
  if (!root.contains("space")) throw ConfigError("space", "is required");
  const json& arr = root.at("space");
  if (!arr.is_array() || arr.empty()) throw ConfigError("space", "must be a non-empty array");
  std::vector<Dimension> dims;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const Fields f(arr[i], "space[" + std::to_string(i) + "]", {"name", "lower", "upper", "scale"});
    Dimension d;
    d.name = f.required_text("name");
    if (!f.has("lower")) throw ConfigError(f.field("lower"), "is required");
    if (!f.has("upper")) throw ConfigError(f.field("upper"), "is required");
    d.lower = f.number("lower", 0.0);
    d.upper = f.number("upper", 0.0);
    const auto scale = parse_scale(f.text("scale", "linear"));
    if (!scale) throw ConfigError(f.field("scale"), "must be linear, log or reverse_log");
    d.scale = *scale;
    dims.push_back(std::move(d));
  }
  try {
    return SearchSpace(std::move(dims));
  } catch (const HpSpaceError& e) {
    throw ConfigError("space", e.what());
  }
}

TrainerSpec parse_trainer(const json& root) {
  if (!root.contains("trainer")) throw ConfigError("trainer", "is required");
  const Fields f(root.at("trainer"), "trainer",
                 {"kind", "dimension", "curvatures", "noise", "test_gap", "rate_max", "command",
                  "args", "timeout_seconds"});
  TrainerSpec spec;
  const auto kind = parse_trainer_kind(f.text("kind", "noisy_quadratic"));
  if (!kind) {
    throw ConfigError(f.field("kind"),
                      "must be noisy_quadratic, phase_surrogate, weight_sensitive or external");
  }
  spec.kind = *kind;
  spec.dimension = f.count("dimension", spec.dimension);
  if (f.has("curvatures")) {
    const auto& c = f.raw("curvatures");
    if (!c.is_array()) throw ConfigError(f.field("curvatures"), "must be an array of numbers");
    for (const auto& h : c) {
      if (!h.is_number()) throw ConfigError(f.field("curvatures"), "must be an array of numbers");
      spec.curvatures.push_back(h.get<double>());
    }
    if (!f.has("dimension")) spec.dimension = spec.curvatures.size();
  }
  spec.noise = f.number("noise", spec.noise);
  spec.test_gap = f.number("test_gap", spec.test_gap);
  if (f.has("rate_max")) spec.rate_max = f.number("rate_max", 0.0);
  spec.command = f.text("command", "");
  if (f.has("args")) {
    const auto& a = f.raw("args");
    if (!a.is_array()) throw ConfigError(f.field("args"), "must be an array of strings");
    for (const auto& s : a) {
      if (!s.is_string()) throw ConfigError(f.field("args"), "must be an array of strings");
      spec.args.push_back(s.get<std::string>());
    }
  }
  spec.timeout_seconds = f.number("timeout_seconds", spec.timeout_seconds);
  try {
    validate(spec);
  } catch (const TrainerError& e) {
    // Messages lead with the dotted field name.
    const std::string what = e.what();
    throw ConfigError(what.substr(0, what.find(' ')), what.substr(what.find(' ') + 1));
  }
  return spec;
}

SearcherConfig parse_searcher(const Fields& parent, SearcherKind fallback_kind) {
  SearcherConfig cfg;
  cfg.kind = fallback_kind;
  if (!parent.has("searcher")) return cfg;
  const json& raw = parent.raw("searcher");
  if (raw.is_string()) {
    const auto kind = parse_searcher_kind(raw.get<std::string>());
    if (!kind) throw ConfigError(parent.field("searcher"), "must be random, tpe, cma or gp_ucb");
    cfg.kind = *kind;
    return cfg;
  }
  const Fields f(raw, parent.field("searcher"), {"kind", "gamma", "pool", "beta_delta", "window"});
  const auto kind = parse_searcher_kind(f.text("kind", std::string(to_string(fallback_kind))));
  if (!kind) throw ConfigError(f.field("kind"), "must be random, tpe, cma or gp_ucb");
  cfg.kind = *kind;
  cfg.gamma = f.number("gamma", cfg.gamma);
  if (f.has("pool")) cfg.pool = f.count("pool", 0);
  cfg.beta_delta = f.number("beta_delta", cfg.beta_delta);
  cfg.window = f.count("window", cfg.window);
  return cfg;
}

CPolicy parse_c(const Fields& f) {
  if (!f.has("c")) return FixedC{1.0};
  const json& raw = f.raw("c");
  if (raw.is_number()) return FixedC{f.number("c", 1.0)};
  const Fields d(raw, f.field("c"),
                 {"dynamic", "initial_mean", "initial_std", "small_interval", "large_interval",
                  "std_min"});
  if (!d.flag("dynamic", true)) throw ConfigError(f.field("c"), "use a number for a fixed c");
  DynamicC dyn;
  dyn.initial_mean = d.number("initial_mean", dyn.initial_mean);
  dyn.initial_std = d.number("initial_std", dyn.initial_std);
  dyn.params.small_interval = d.number("small_interval", dyn.params.small_interval);
  dyn.params.large_interval = d.number("large_interval", dyn.params.large_interval);
  dyn.params.std_min = d.number("std_min", dyn.params.std_min);
  return dyn;
}

EarlyStopConfig parse_early_stop(const Fields& parent) {
  EarlyStopConfig es;
  if (!parent.has("early_stop")) return es;
  const Fields f(parent.raw("early_stop"), parent.field("early_stop"),
                 {"level1", "level2", "level3"});
  if (f.has("level1")) {
    const json& raw = f.raw("level1");
    if (raw.is_boolean()) {
      es.level1.enabled = raw.get<bool>();
    } else {
      const Fields l(raw, f.field("level1"), {"enabled", "threshold", "window"});
      es.level1.enabled = l.flag("enabled", true);
      es.level1.threshold = l.number("threshold", es.level1.threshold);
      es.level1.window = l.count("window", es.level1.window);
    }
  }
  if (f.has("level2")) {
    const json& raw = f.raw("level2");
    if (raw.is_boolean()) {
      es.level2.enabled = raw.get<bool>();
    } else {
      const Fields l(raw, f.field("level2"), {"enabled", "quantile"});
      es.level2.enabled = l.flag("enabled", true);
      es.level2.quantile = l.number("quantile", es.level2.quantile);
    }
  }
  es.level3 = f.flag("level3", false);
  return es;
}

RunConfig parse_gpbt(const Fields& f) {
  RunConfig cfg;
  cfg.n = f.count("n", cfg.n);
  cfg.t_max = f.count("t_max", cfg.t_max);
  cfg.generation_iterations = f.count("T_g", cfg.generation_iterations);
  cfg.c_policy = parse_c(f);
  cfg.searcher = parse_searcher(f, SearcherKind::tpe);
  const auto mode = parse_history_mode(f.text("history_mode", "sibling_only"));
  if (!mode) throw ConfigError(f.field("history_mode"), "must be sibling_only or time_enriched");
  cfg.history_mode = *mode;
  cfg.seed_gen0_history = f.flag("seed_gen0_history", false);
  cfg.early_stop = parse_early_stop(f);
  if (f.has("selection_noise")) {
    const json& raw = f.raw("selection_noise");
    if (raw.is_boolean()) {
      cfg.selection_noise.enabled = raw.get<bool>();
    } else {
      const Fields s(raw, f.field("selection_noise"), {"enabled", "temperature"});
      cfg.selection_noise.enabled = s.flag("enabled", true);
      cfg.selection_noise.temperature = s.number("temperature", cfg.selection_noise.temperature);
    }
  }
  cfg.parallelism = f.count("parallelism", cfg.parallelism);
  with_prefix(f.path(), [&] { validate(cfg); });
  return cfg;
}

PbtConfig parse_pbt(const Fields& f) {
  PbtConfig cfg;
  cfg.n = f.count("n", cfg.n);
  cfg.t_max = f.count("t_max", cfg.t_max);
  cfg.generation_iterations = f.count("T_g", cfg.generation_iterations);
  cfg.truncation_fraction = f.number("truncation_fraction", cfg.truncation_fraction);
  cfg.resample_probability = f.number("resample_probability", cfg.resample_probability);
  if (f.has("perturb_factors")) {
    const auto& pf = f.raw("perturb_factors");
    if (!pf.is_array() || pf.size() != 2 || !pf[0].is_number() || !pf[1].is_number()) {
      throw ConfigError(f.field("perturb_factors"), "must be two numbers [down, up]");
    }
    cfg.perturb_down = pf[0].get<double>();
    cfg.perturb_up = pf[1].get<double>();
  }
  with_prefix(f.path(), [&] { validate(cfg); });
  return cfg;
}

NonadaptiveConfig parse_nonadaptive(const Fields& f) {
  NonadaptiveConfig cfg;
  cfg.searcher = parse_searcher(f, SearcherKind::random);
  // Budget parity with a population run of the same shape.
  const std::size_t n = f.count("n", 16);
  const std::size_t t_max = f.count("t_max", 5);
  const std::size_t tg = f.count("T_g", 1);
  cfg.trials = f.count("trials", n * t_max);
  cfg.total_iterations = f.count("total_iterations", t_max * tg);
  with_prefix(f.path(), [&] { validate(cfg); });
  return cfg;
}

ordered_json searcher_json(const SearcherConfig& s) {
  ordered_json j;
  j["kind"] = to_string(s.kind);
  j["gamma"] = s.gamma;
  j["pool"] = s.pool ? ordered_json(*s.pool) : ordered_json(nullptr);
  j["beta_delta"] = s.beta_delta;
  j["window"] = s.window;
  return j;
}

ordered_json method_json(const MethodEntry& entry) {
  ordered_json j;
  j["label"] = entry.label;
  j["method"] = to_string(entry.method);
  if (const auto* r = std::get_if<RunConfig>(&entry.config)) {
    j["n"] = r->n;
    j["t_max"] = r->t_max;
    j["T_g"] = r->generation_iterations;
    if (const auto* fixed = std::get_if<FixedC>(&r->c_policy)) {
      j["c"] = fixed->c;
    } else {
      const auto& d = std::get<DynamicC>(r->c_policy);
      j["c"] = {{"dynamic", true},
                {"initial_mean", d.initial_mean},
                {"initial_std", d.initial_std},
                {"small_interval", d.params.small_interval},
                {"large_interval", d.params.large_interval},
                {"std_min", d.params.std_min}};
    }
    j["searcher"] = searcher_json(r->searcher);
    j["history_mode"] = to_string(r->history_mode);
    j["seed_gen0_history"] = r->seed_gen0_history;
    const auto& es = r->early_stop;
    j["early_stop"] = {
        {"level1",
         {{"enabled", es.level1.enabled},
          {"threshold", es.level1.threshold},
          {"window", es.level1.window}}},
        {"level2", {{"enabled", es.level2.enabled}, {"quantile", es.level2.quantile}}},
        {"level3", es.level3}};
    j["selection_noise"] = {{"enabled", r->selection_noise.enabled},
                            {"temperature", r->selection_noise.temperature}};
    j["parallelism"] = r->parallelism;
  } else if (const auto* p = std::get_if<PbtConfig>(&entry.config)) {
    j["n"] = p->n;
    j["t_max"] = p->t_max;
    j["T_g"] = p->generation_iterations;
    j["truncation_fraction"] = p->truncation_fraction;
    j["resample_probability"] = p->resample_probability;
    j["perturb_factors"] = {p->perturb_down, p->perturb_up};
  } else {
    const auto& a = std::get<NonadaptiveConfig>(entry.config);
    j["searcher"] = searcher_json(a.searcher);
    j["trials"] = a.trials;
    j["total_iterations"] = a.total_iterations;
  }
  return j;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  const Fields top(root, "",
                   {"name", "seeds", "trainer", "space", "methods", "output_dir", "description"});

  std::vector<std::uint64_t> seeds;
  if (!top.has("seeds")) throw ConfigError("seeds", "is required");
  const json& s = top.raw("seeds");
  if (!s.is_array() || s.empty()) throw ConfigError("seeds", "must be a non-empty array");
  for (const auto& v : s) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("seeds", "must contain non-negative integers");
    }
    seeds.push_back(v.get<std::uint64_t>());
  }

  SearchSpace space = parse_space(root);
  TrainerSpec trainer = parse_trainer(root);

  if (!top.has("methods")) throw ConfigError("methods", "is required");
  const json& m = top.raw("methods");
  if (!m.is_array() || m.empty()) throw ConfigError("methods", "must be a non-empty array");
  std::vector<MethodEntry> methods;
  std::set<std::string> labels;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::string path = "methods[" + std::to_string(i) + "]";
    if (!m[i].is_object() || !m[i].contains("method")) {
      throw ConfigError(join(path, "method"), "is required");
    }
    const json& method_name = m[i].at("method");
    const auto method =
        method_name.is_string() ? parse_method(method_name.get<std::string>()) : std::nullopt;
    if (!method) throw ConfigError(join(path, "method"), "must be gpbt, pbt, nonadaptive or pooled");

    MethodEntry entry;
    entry.method = *method;
    switch (*method) {
      case Method::gpbt:
      case Method::pooled: {
        const Fields f(m[i], path,
                       {"label", "method", "n", "t_max", "T_g", "c", "searcher", "history_mode",
                        "seed_gen0_history", "early_stop", "selection_noise", "parallelism"});
        entry.label = f.text("label", std::string(to_string(*method)));
        entry.config = parse_gpbt(f);
        break;
      }
      case Method::pbt: {
        const Fields f(m[i], path,
                       {"label", "method", "n", "t_max", "T_g", "truncation_fraction",
                        "resample_probability", "perturb_factors"});
        entry.label = f.text("label", "pbt");
        entry.config = parse_pbt(f);
        break;
      }
      case Method::nonadaptive: {
        const Fields f(m[i], path,
                       {"label", "method", "searcher", "trials", "total_iterations", "n", "t_max",
                        "T_g"});
        entry.label = f.text("label", "nonadaptive");
        entry.config = parse_nonadaptive(f);
        break;
      }
    }
    if (entry.label.empty() || entry.label.find_first_of("/,\"") != std::string::npos ||
        entry.label == "." || entry.label == ".." || entry.label == "sweep-c") {
      throw ConfigError(join(path, "label"), "must be a plain directory name");
    }
    if (!labels.insert(entry.label).second) {
      throw ConfigError(join(path, "label"), "duplicate label '" + entry.label + "'");
    }
    methods.push_back(std::move(entry));
  }

  return ExperimentConfig{top.text("name", "experiment"), std::move(methods), std::move(seeds),
                          std::move(trainer), std::move(space), top.text("output_dir", "")};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& config) {
  ordered_json j;
  j["name"] = config.name;
  j["seeds"] = config.seeds;
  ordered_json t;
  t["kind"] = to_string(config.trainer.kind);
  if (config.trainer.kind == TrainerKind::external) {
    t["command"] = config.trainer.command;
    t["args"] = config.trainer.args;
    t["timeout_seconds"] = config.trainer.timeout_seconds;
  } else {
    t["dimension"] = config.trainer.dimension;
    t["curvatures"] = config.trainer.curvatures.empty()
                          ? default_curvatures(config.trainer.dimension)
                          : config.trainer.curvatures;
    t["noise"] = config.trainer.noise;
    t["test_gap"] = config.trainer.test_gap;
    t["rate_max"] =
        config.trainer.rate_max ? ordered_json(*config.trainer.rate_max) : ordered_json(nullptr);
  }
  j["trainer"] = t;
  ordered_json space = ordered_json::array();
  for (const auto& d : config.space.dims()) {
    space.push_back({{"name", d.name},
                     {"lower", d.lower},
                     {"upper", d.upper},
                     {"scale", to_string(d.scale)}});
  }
  j["space"] = space;
  ordered_json methods = ordered_json::array();
  for (const auto& e : config.methods) methods.push_back(method_json(e));
  j["methods"] = methods;
  return j.dump(2);
}

std::string entry_to_json(const MethodEntry& entry) { return method_json(entry).dump(); }

std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                         const std::optional<std::string>& override_dir) {
  if (override_dir && !override_dir->empty()) return *override_dir;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("GPBT_OUT_DIR"); env && *env) return env;
  return "results";
}

}  // namespace gpbt
