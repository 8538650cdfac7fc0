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

#include <chrono>

#include "gpbt/orchestrator.hpp"

namespace gpbt::detail {

/// Where a child's searcher history comes from.
enum class HistorySource { lineage, pooled };

RunResult run_generations(const RunConfig& config, const SearchSpace& space, Trainer& trainer,
                          HistorySource source, const RunHooks& hooks);

struct ChildOutcome {
  TrainerState state;
  Evaluation eval;
  std::size_t epochs = 0;
  bool early_stopped = false;
};

/// Trains a forked child for `iterations`; with a ledger and iterations > 1 the
/// child is early-evaluated after one iteration and may stop there.
ChildOutcome train_child(Trainer& trainer, TrainerState state, const HpVector& hp,
                         std::size_t iterations, EarlyEvalLedger* ledger);

/// Milliseconds since construction; always 0 when disabled.
class WallClock {
 public:
  explicit WallClock(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

CurvePoint make_curve_point(const GenealogyTree& tree, std::size_t generation,
                            std::size_t epochs_consumed, double wall_ms);

/// Fills best agent, schedule, losses and epoch total from the tree.
void finalize(RunResult& result);

}  // namespace gpbt::detail
