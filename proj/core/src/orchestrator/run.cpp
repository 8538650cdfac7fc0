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
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "orchestrator/engine.hpp"

namespace gpbt {

void validate(const RunConfig& config) {
  if (config.n < 1) throw ConfigError("n", "must be >= 1");
  if (config.t_max < 1) throw ConfigError("t_max", "must be >= 1");
  if (config.generation_iterations < 1) throw ConfigError("T_g", "must be >= 1");
  if (const auto* fixed = std::get_if<FixedC>(&config.c_policy)) {
    if (!(fixed->c > 0.0) || !std::isfinite(fixed->c)) throw ConfigError("c", "must be > 0");
  } else {
    const auto& dyn = std::get<DynamicC>(config.c_policy);
    if (config.n < 2) throw ConfigError("c", "dynamic c needs n >= 2");
    if (!(dyn.initial_mean > 0.0)) throw ConfigError("c.initial_mean", "must be > 0");
    if (!(dyn.initial_std > 0.0)) throw ConfigError("c.initial_std", "must be > 0");
    if (!(dyn.params.small_interval > 0.0) ||
        !(dyn.params.large_interval > dyn.params.small_interval)) {
      throw ConfigError("c.large_interval", "need 0 < small_interval < large_interval");
    }
    if (!(dyn.params.std_min > 0.0)) throw ConfigError("c.std_min", "must be > 0");
  }
  try {
    validate(config.searcher);
  } catch (const SearcherError& e) {
    throw ConfigError("searcher", e.what());
  }
  const auto& es = config.early_stop;
  if (es.level1.enabled) {
    if (!(es.level1.threshold >= 0.0)) throw ConfigError("early_stop.level1.threshold", "must be >= 0");
    if (es.level1.window < 1) throw ConfigError("early_stop.level1.window", "must be >= 1");
  }
  if (es.level2.enabled && !(es.level2.quantile >= 0.0 && es.level2.quantile <= 1.0)) {
    throw ConfigError("early_stop.level2.quantile", "must be in [0, 1]");
  }
  if (config.selection_noise.enabled && !(config.selection_noise.temperature > 0.0)) {
    throw ConfigError("selection_noise.temperature", "must be > 0");
  }
  if (config.parallelism < 1) throw ConfigError("parallelism", "must be >= 1");
}

namespace detail {

ChildOutcome train_child(Trainer& trainer, TrainerState state, const HpVector& hp,
                         std::size_t iterations, EarlyEvalLedger* ledger) {
  if (ledger && iterations > 1) {
    trainer.step(state, hp, 1);
    const Evaluation early = trainer.evaluate(state);
    if (ledger->submit(early.val_loss) == MedianDecision::early_stop) {
      return {std::move(state), early, 1, true};
    }
    trainer.step(state, hp, iterations - 1);
  } else {
    trainer.step(state, hp, iterations);
  }
  const Evaluation eval = trainer.evaluate(state);
  return {std::move(state), eval, iterations, false};
}

CurvePoint make_curve_point(const GenealogyTree& tree, std::size_t generation,
                            std::size_t epochs_consumed, double wall_ms) {
  CurvePoint point;
  point.generation = generation;
  point.epochs_consumed = epochs_consumed;
  point.wall_ms = wall_ms;
  if (auto best = tree.best_overall()) {
    point.best_seen_val = tree.at(*best).val_loss;
    point.best_seen_test = tree.at(*best).test_loss;
  }
  return point;
}

void finalize(RunResult& result) {
  const auto best = result.tree.best_overall();
  if (!best) return;
  result.best_agent = *best;
  result.best_schedule = result.tree.schedule(*best);
  result.best_val_loss = result.tree.at(*best).val_loss;
  result.best_test_loss = result.tree.at(*best).test_loss;
  result.total_epochs = 0;
  for (const auto& r : result.tree.records()) result.total_epochs += r.epochs_trained;
}

namespace {

struct Task {
  std::optional<AgentId> parent;
  std::size_t group = 0;
};

// Children per parent when fewer parents than planned are available.
std::vector<std::size_t> spread(std::size_t children, std::size_t parents) {
  std::vector<std::size_t> counts(parents, children / parents);
  for (std::size_t i = 0; i < children % parents; ++i) ++counts[i];
  return counts;
}

[[noreturn]] void rethrow_with_context(const TrainerError& e, std::size_t generation,
                                       AgentId id) {
  throw TrainerError("agent " + std::to_string(id.value) + " (generation " +
                     std::to_string(generation) + "): " + e.what());
}

}  // namespace

RunResult run_generations(const RunConfig& config, const SearchSpace& space, Trainer& trainer,
                          HistorySource source, const RunHooks& hooks) {
  validate(config);
  Rng search_rng(derive_seed(config.seed, kSearchStreamTag));
  Rng select_rng(derive_seed(config.seed, kSelectionStreamTag));
  Rng c_rng(derive_seed(config.seed, kDynamicCStreamTag));
  const WallClock clock(config.mode == ExecutionMode::parallel);
  const std::size_t n = config.n;
  const std::size_t iterations = config.generation_iterations;

  RunResult result;
  GenealogyTree& tree = result.tree;

  std::optional<DynamicCState> dyn;
  if (const auto* d = std::get_if<DynamicC>(&config.c_policy)) {
    dyn = DynamicCState{d->initial_mean, d->initial_std, d->initial_mean};
  }

  TrainerState root;
  try {
    root = trainer.init(config.seed);
  } catch (const TrainerError& e) {
    throw TrainerError(std::string("initial model: ") + e.what());
  }

  std::map<AgentId, TrainerState> live;  // states of the last generation's children
  std::vector<double> previous_losses;
  History shared_history;  // generation 0: one history shared by all children
  std::size_t epochs = 0;

  for (std::size_t g = 0; g < config.t_max; ++g) {
    std::vector<Task> tasks;
    std::vector<double> group_c;

    if (g == 0) {
      tasks.assign(n, Task{std::nullopt, 0});
      result.transfer_ledger.push_back(1);
    } else {
      std::vector<Candidate> candidates;
      for (const auto& [id, state] : live) candidates.push_back({id, tree.at(id).val_loss});

      std::vector<std::size_t> group_size;
      if (dyn) {
        const auto [ca, cb] = dynamic_c_sample(*dyn, n, c_rng);
        group_c = {ca, cb};
        group_size = {n / 2, n - n / 2};
      } else {
        group_c = {std::get<FixedC>(config.c_policy).c};
        group_size = {n};
      }

      std::set<AgentId> distinct;
      for (std::size_t grp = 0; grp < group_c.size(); ++grp) {
        GenerationPlan plan = plan_generation(group_size[grp], group_c[grp]);
        const auto parents =
            select_parents(candidates, plan.parents, config.selection_noise, select_rng);
        if (parents.size() < plan.parents) {
          plan.parents = parents.size();
          plan.children_per_parent = spread(group_size[grp], plan.parents);
        }
        tree.mark_parents(g - 1, parents);
        distinct.insert(parents.begin(), parents.end());

        std::vector<std::size_t> ranks(plan.parents);
        std::iota(ranks.begin(), ranks.end(), 0);
        for (const auto& slot : schedule_children_for_level3(plan, ranks)) {
          tasks.push_back({parents[slot.parent], grp});
        }
      }
      result.transfer_ledger.push_back(distinct.size());
    }

    EarlyEvalLedger early;
    EarlyEvalLedger* ledger = config.early_stop.level3 ? &early : nullptr;
    std::map<AgentId, History> within;
    std::vector<double> current_losses;
    std::vector<double> group_best(std::max<std::size_t>(group_c.size(), 1),
                                   std::numeric_limits<double>::infinity());
    std::map<AgentId, TrainerState> next_live;
    bool generation_done = false;

    auto assemble = [&](const Task& task) -> History {
      if (!task.parent) return shared_history;
      if (source == HistorySource::pooled) return tree.all_observations();
      return tree.lineage_history(*task.parent, config.history_mode, within[*task.parent],
                                  config.seed_gen0_history);
    };
    auto draw = [&](const Task& task, AgentId id) {
      const History history = assemble(task);
      if (hooks.on_suggest) hooks.on_suggest({g, id, task.parent, &history});
      return suggest(config.searcher, space, history, search_rng);
    };

    auto start_state = [&](const Task& task, AgentId id) {
      const TrainerState& from = task.parent ? live.at(*task.parent) : root;
      try {
        return trainer.fork(from, id.value);
      } catch (const TrainerError& e) {
        rethrow_with_context(e, g, id);
      }
    };

    auto commit = [&](const Task& task, HpVector hp, ChildOutcome outcome) {
      const AgentId id =
          tree.record_child(task.parent, g, hp, outcome.eval.val_loss, outcome.eval.test_loss,
                            outcome.epochs, outcome.early_stopped);
      epochs += outcome.epochs;
      if (task.parent) {
        within[*task.parent].add(std::move(hp), outcome.eval.val_loss);
      } else {
        shared_history.add(std::move(hp), outcome.eval.val_loss);
      }
      current_losses.push_back(outcome.eval.val_loss);
      group_best[task.group] = std::min(group_best[task.group], outcome.eval.val_loss);
      next_live.emplace(id, std::move(outcome.state));
      if (config.early_stop.level2.enabled && g > 0 &&
          satisfaction_gate(current_losses, previous_losses, config.early_stop.level2.quantile) ==
              GenerationDecision::end_generation) {
        generation_done = true;
      }
    };

    const std::size_t wave =
        config.mode == ExecutionMode::parallel ? std::max<std::size_t>(config.parallelism, 1) : 1;
    for (std::size_t begin = 0; begin < tasks.size() && !generation_done; begin += wave) {
      const std::size_t end = std::min(begin + wave, tasks.size());
      if (wave == 1) {
        const Task& task = tasks[begin];
        const AgentId id = tree.next_id();
        HpVector hp = draw(task, id);
        ChildOutcome outcome;
        try {
          outcome = train_child(trainer, start_state(task, id), hp, iterations, ledger);
        } catch (const TrainerError& e) {
          rethrow_with_context(e, g, id);
        }
        commit(task, std::move(hp), std::move(outcome));
        continue;
      }

      std::vector<HpVector> hps;
      std::vector<std::future<ChildOutcome>> futures;
      for (std::size_t i = begin; i < end; ++i) {
        const AgentId id{tree.next_id().value + static_cast<std::uint32_t>(i - begin)};
        hps.push_back(draw(tasks[i], id));
      }
      for (std::size_t i = begin; i < end; ++i) {
        const AgentId id{tree.next_id().value + static_cast<std::uint32_t>(i - begin)};
        futures.push_back(std::async(std::launch::async,
                                     [&trainer, &hp = hps[i - begin], iterations, ledger,
                                      state = start_state(tasks[i], id)]() mutable {
                                       return train_child(trainer, std::move(state), hp,
                                                          iterations, ledger);
                                     }));
      }
      for (std::size_t i = begin; i < end; ++i) {
        ChildOutcome outcome;
        try {
          outcome = futures[i - begin].get();
        } catch (const TrainerError& e) {
          rethrow_with_context(e, g, tree.next_id());
        }
        commit(tasks[i], std::move(hps[i - begin]), std::move(outcome));
      }
    }

    previous_losses = std::move(current_losses);
    live = std::move(next_live);

    if (dyn) {
      if (g > 0) {
        const double winner = group_best[0] <= group_best[1] ? group_c[0] : group_c[1];
        const auto& params = std::get<DynamicC>(config.c_policy).params;
        *dyn = dynamic_c_update(*dyn, winner, n, params);
        result.dynamic_c.push_back({g, group_c[0], group_c[1], winner, dyn->mean, dyn->std});
      }
    }

    result.curve.push_back(make_curve_point(tree, g, epochs, clock.ms()));
    if (hooks.progress) hooks.progress(result.curve.back());

    if (config.early_stop.level1.enabled) {
      std::vector<double> series;
      for (const auto& p : result.curve) series.push_back(p.best_seen_val);
      if (convergence_gate(series, config.early_stop.level1.threshold,
                           config.early_stop.level1.window) == RunDecision::halt_run) {
        result.halted_early = g + 1 < config.t_max;
        break;
      }
    }
  }

  finalize(result);
  return result;
}

}  // namespace detail

RunResult run(const RunConfig& config, const SearchSpace& space, Trainer& trainer,
              const ProgressCallback& progress) {
  return run(config, space, trainer, RunHooks{progress, {}});
}

RunResult run(const RunConfig& config, const SearchSpace& space, Trainer& trainer,
              const RunHooks& hooks) {
  return detail::run_generations(config, space, trainer, detail::HistorySource::lineage, hooks);
}

TrainerState replay_state(Trainer& trainer, std::uint64_t seed, const GenealogyTree& tree,
                          AgentId id) {
  TrainerState state = trainer.init(seed);
  for (AgentId a : tree.ancestry(id)) {
    const auto& rec = tree.at(a);
    state = trainer.fork(state, a.value);
    trainer.step(state, rec.hp, rec.epochs_trained);
  }
  return state;
}

Evaluation replay_lineage(Trainer& trainer, std::uint64_t seed, const GenealogyTree& tree,
                          AgentId id) {
  return trainer.evaluate(replay_state(trainer, seed, tree, id));
}

}  // namespace gpbt
