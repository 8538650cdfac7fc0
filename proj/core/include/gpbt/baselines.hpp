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

#include "gpbt/orchestrator.hpp"

namespace gpbt {

struct PbtConfig {
  std::size_t n = 16;
  std::size_t t_max = 5;
  std::size_t generation_iterations = 1;  // T_g
  /// Fraction q of the population that is exploited (bottom) and exploited from (top).
  double truncation_fraction = 0.25;
  double resample_probability = 0.25;
  double perturb_down = 0.8;
  double perturb_up = 1.2;
  std::uint64_t seed = 0;
};

/// Throws ConfigError naming the offending field.
void validate(const PbtConfig& config);

/// Exploit copies per generation: ceil(q n), capped at floor(n / 2) so the
/// top and bottom groups stay disjoint.
std::size_t pbt_exploit_count(std::size_t n, double q);

/// Explore step: resample uniformly with probability resample_probability,
/// otherwise scale every dimension by 0.8 or 1.2 in native space and clip.
HpVector pbt_explore(const PbtConfig& config, const SearchSpace& space, const HpVector& hp,
                     Rng& rng);

/// Population-based training. All n agents persist; every generation the
/// bottom group copies the state and hp of a uniformly chosen top member and
/// explores. Agents are recorded in the genealogy each generation as the child
/// of the agent whose state they continue.
RunResult run_pbt(const PbtConfig& config, const SearchSpace& space, Trainer& trainer,
                  const ProgressCallback& progress = {});

inline SearcherConfig random_searcher() {
  SearcherConfig config;
  config.kind = SearcherKind::random;
  return config;
}

struct NonadaptiveConfig {
  SearcherConfig searcher = random_searcher();
  std::size_t trials = 16;
  std::size_t total_iterations = 5;  // T_total
  std::uint64_t seed = 0;
};

void validate(const NonadaptiveConfig& config);

/// Searcher-driven constant-hp runs, each trained for total_iterations from a
/// fresh initial state. One curve point per trial.
RunResult run_nonadaptive(const NonadaptiveConfig& config, const SearchSpace& space,
                          Trainer& trainer, const ProgressCallback& progress = {});

/// GPBT in which every child's searcher sees all observations of the run.
RunResult run_pooled_ablation(const RunConfig& config, const SearchSpace& space,
                              Trainer& trainer, const ProgressCallback& progress = {});
RunResult run_pooled_ablation(const RunConfig& config, const SearchSpace& space,
                              Trainer& trainer, const RunHooks& hooks);

}  // namespace gpbt
