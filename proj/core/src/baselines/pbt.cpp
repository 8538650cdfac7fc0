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
#include <map>
#include <numeric>

#include "gpbt/baselines.hpp"
#include "orchestrator/engine.hpp"

namespace gpbt {

void validate(const PbtConfig& config) {
  if (config.n < 1) throw ConfigError("n", "must be >= 1");
  if (config.t_max < 1) throw ConfigError("t_max", "must be >= 1");
  if (config.generation_iterations < 1) throw ConfigError("T_g", "must be >= 1");
  if (!(config.truncation_fraction > 0.0 && config.truncation_fraction <= 0.5)) {
    throw ConfigError("truncation_fraction", "must be in (0, 0.5]");
  }
  if (!(config.resample_probability >= 0.0 && config.resample_probability <= 1.0)) {
    throw ConfigError("resample_probability", "must be in [0, 1]");
  }
  if (!(config.perturb_down > 0.0) || !(config.perturb_up > 0.0)) {
    throw ConfigError("perturb_factors", "must be > 0");
  }
}

std::size_t pbt_exploit_count(std::size_t n, double q) {
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  return std::min(k, n / 2);
}

HpVector pbt_explore(const PbtConfig& config, const SearchSpace& space, const HpVector& hp,
                     Rng& rng) {
  if (rng.bernoulli(config.resample_probability)) return sample_uniform(space, rng);
  HpVector out = hp;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double factor = rng.bernoulli(0.5) ? config.perturb_up : config.perturb_down;
    out.values[i] = std::clamp(hp[i] * factor, space[i].lower, space[i].upper);
  }
  return out;
}

RunResult run_pbt(const PbtConfig& config, const SearchSpace& space, Trainer& trainer,
                  const ProgressCallback& progress) {
  validate(config);
  Rng rng(derive_seed(config.seed, kSearchStreamTag));
  const detail::WallClock clock(false);
  const std::size_t n = config.n;
  const std::size_t k = pbt_exploit_count(n, config.truncation_fraction);

  RunResult result;
  GenealogyTree& tree = result.tree;
  const TrainerState root = trainer.init(config.seed);

  // Slot i holds the latest record of agent i and its state.
  std::vector<AgentId> current(n);
  std::vector<TrainerState> states(n);
  std::size_t epochs = 0;

  auto train = [&](std::optional<AgentId> parent, std::size_t g, const TrainerState& from,
                   HpVector hp, std::size_t slot) {
    const AgentId id = tree.next_id();
    detail::ChildOutcome outcome;
    try {
      outcome = detail::train_child(trainer, trainer.fork(from, id.value), hp,
                                    config.generation_iterations, nullptr);
    } catch (const TrainerError& e) {
      throw TrainerError("agent " + std::to_string(id.value) + " (generation " +
                         std::to_string(g) + "): " + e.what());
    }
    tree.record_child(parent, g, std::move(hp), outcome.eval.val_loss, outcome.eval.test_loss,
                      outcome.epochs, false);
    epochs += outcome.epochs;
    current[slot] = id;
    states[slot] = std::move(outcome.state);
  };

  for (std::size_t g = 0; g < config.t_max; ++g) {
    if (g == 0) {
      result.transfer_ledger.push_back(1);
      for (std::size_t i = 0; i < n; ++i) train(std::nullopt, 0, root, sample_uniform(space, rng), i);
    } else {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double la = tree.at(current[a]).val_loss;
        const double lb = tree.at(current[b]).val_loss;
        return la < lb || (la == lb && current[a] < current[b]);
      });
      // Source slot and hp of every agent this generation.
      std::vector<std::size_t> source(n);
      std::vector<HpVector> hps(n);
      for (std::size_t i = 0; i < n; ++i) {
        source[i] = i;
        hps[i] = tree.at(current[i]).hp;
      }
      for (std::size_t b = n - k; b < n; ++b) {
        const std::size_t loser = order[b];
        const std::size_t donor = order[rng.index(k)];
        source[loser] = donor;
        hps[loser] = pbt_explore(config, space, tree.at(current[donor]).hp, rng);
      }
      std::vector<AgentId> parents;
      for (std::size_t i : order) parents.push_back(current[i]);
      tree.mark_parents(g - 1, parents);
      result.transfer_ledger.push_back(k);

      const std::vector<AgentId> prev_ids = current;
      const std::vector<TrainerState> prev_states = states;
      for (std::size_t i = 0; i < n; ++i) {
        train(prev_ids[source[i]], g, prev_states[source[i]], std::move(hps[i]), i);
      }
    }
    result.curve.push_back(detail::make_curve_point(tree, g, epochs, clock.ms()));
    if (progress) progress(result.curve.back());
  }

  detail::finalize(result);
  return result;
}

}  // namespace gpbt
