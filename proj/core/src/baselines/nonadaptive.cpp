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

#include "gpbt/baselines.hpp"
#include "orchestrator/engine.hpp"

namespace gpbt {

void validate(const NonadaptiveConfig& config) {
  if (config.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (config.total_iterations < 1) throw ConfigError("total_iterations", "must be >= 1");
  try {
    validate(config.searcher);
  } catch (const SearcherError& e) {
    throw ConfigError("searcher", e.what());
  }
}

RunResult run_nonadaptive(const NonadaptiveConfig& config, const SearchSpace& space,
                          Trainer& trainer, const ProgressCallback& progress) {
  validate(config);
  Rng rng(derive_seed(config.seed, kSearchStreamTag));
  const detail::WallClock clock(false);

  RunResult result;
  GenealogyTree& tree = result.tree;
  History history;
  std::size_t epochs = 0;
  result.transfer_ledger.push_back(1);

  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    HpVector hp = suggest(config.searcher, space, history, rng);
    const AgentId id = tree.next_id();
    detail::ChildOutcome outcome;
    try {
      const TrainerState fresh = trainer.init(config.seed);
      outcome = detail::train_child(trainer, trainer.fork(fresh, id.value), hp,
                                    config.total_iterations, nullptr);
    } catch (const TrainerError& e) {
      throw TrainerError("trial " + std::to_string(trial) + ": " + e.what());
    }
    tree.record_child(std::nullopt, 0, hp, outcome.eval.val_loss, outcome.eval.test_loss,
                      outcome.epochs, false);
    history.add(std::move(hp), outcome.eval.val_loss);
    epochs += outcome.epochs;
    result.curve.push_back(detail::make_curve_point(tree, trial, epochs, clock.ms()));
    if (progress) progress(result.curve.back());
  }

  detail::finalize(result);
  return result;
}

RunResult run_pooled_ablation(const RunConfig& config, const SearchSpace& space,
                              Trainer& trainer, const ProgressCallback& progress) {
  return run_pooled_ablation(config, space, trainer, RunHooks{progress, {}});
}

RunResult run_pooled_ablation(const RunConfig& config, const SearchSpace& space,
                              Trainer& trainer, const RunHooks& hooks) {
  return detail::run_generations(config, space, trainer, detail::HistorySource::pooled, hooks);
}

}  // namespace gpbt
