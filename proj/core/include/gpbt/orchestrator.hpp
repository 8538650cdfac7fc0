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
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "gpbt/errors.hpp"
#include "gpbt/genealogy.hpp"
#include "gpbt/hp_space.hpp"
#include "gpbt/random.hpp"
#include "gpbt/searchers.hpp"
#include "gpbt/trainers.hpp"

namespace gpbt {

// ---------------------------------------------------------------------------
// Population arithmetic

struct GenerationPlan {
  std::size_t parents = 1;
  /// Children of each parent in rank order; sums to n.
  std::vector<std::size_t> children_per_parent;
};

/// p = clamp(round(sqrt(n / c)), 1, n) parents with floor(n / p) children
/// each; the remainder goes one extra child at a time to the best-ranked
/// parents.
GenerationPlan plan_generation(std::size_t n, double c);

/// True when round(sqrt(n / c)) already lies in [1, n], i.e. plan_generation
/// does not need to clamp.
bool c_fits_population(std::size_t n, double c) noexcept;

// ---------------------------------------------------------------------------
// Parent selection

struct Candidate {
  AgentId id;
  double val_loss = 0.0;
};

struct SelectionNoise {
  bool enabled = false;
  double temperature = 1.0;
};

/// Rank-ordered (best first) parent ids. Without noise: the p lowest losses,
/// ties to the lower id. With Boltzmann noise: p distinct draws without
/// replacement, weights proportional to exp(-loss / T). Returns every
/// candidate when fewer than p are available.
std::vector<AgentId> select_parents(std::span<const Candidate> candidates, std::size_t p,
                                    const SelectionNoise& noise, Rng& rng);

// ---------------------------------------------------------------------------
// Early stopping

enum class MedianDecision { keep_training, early_stop };
enum class RunDecision { keep_going, halt_run };
enum class GenerationDecision { keep_going, end_generation };

/// Level 3: stop iff the candidate's one-iteration loss is strictly worse than
/// the median of the losses already early-evaluated this generation.
MedianDecision median_gate(std::span<const double> early_losses_so_far, double candidate);

/// Level 1: halt iff the mean of the last `window` successive differences of
/// the best-seen series is greater than -threshold. Keeps going while the
/// series is shorter than window + 1.
RunDecision convergence_gate(std::span<const double> best_seen, double threshold,
                             std::size_t window);

/// Level 2: end the generation iff some loss of the current generation is <=
/// the lower `quantile` quantile of the previous generation. Inert when
/// `previous` is empty.
GenerationDecision satisfaction_gate(std::span<const double> current,
                                     std::span<const double> previous, double quantile);

/// Shared one-iteration losses of a generation. submit() runs the median gate
/// and records the loss atomically, so concurrent children see a consistent
/// ledger.
class EarlyEvalLedger {
 public:
  MedianDecision submit(double early_loss);
  std::vector<double> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::vector<double> losses_;
};

struct ChildSlot {
  std::size_t parent = 0;  // index into the plan's parent list
  std::size_t child = 0;
  friend bool operator==(const ChildSlot&, const ChildSlot&) = default;
};

/// Evaluation order of a generation: parents by rank, best first, each
/// parent's children in creation order. `parent_ranks[i]` is the rank of the
/// plan's i-th parent.
std::vector<ChildSlot> schedule_children_for_level3(const GenerationPlan& plan,
                                                    std::span<const std::size_t> parent_ranks);

// ---------------------------------------------------------------------------
// Dynamic c

struct DynamicCState {
  double mean = 2.0;
  double std = 1.0;
  double last_best_c = 2.0;
};

struct DynamicCParams {
  double small_interval = 0.3;  // |winner - mean| below this * std halves std
  double large_interval = 1.5;  // above this * std doubles std
  double std_min = 0.05;
};

/// Valid range of c for a half population of size m = floor(n / 2): [1/m, m].
std::pair<double, double> dynamic_c_range(std::size_t n);
/// Two independent draws from Normal(mean, std), clamped to dynamic_c_range(n).
std::pair<double, double> dynamic_c_sample(const DynamicCState& state, std::size_t n, Rng& rng);
/// mean <- winner; std halved or doubled by the interval rule; std clamped to [std_min, n].
DynamicCState dynamic_c_update(const DynamicCState& state, double winner_c, std::size_t n,
                               const DynamicCParams& params = {});

// ---------------------------------------------------------------------------
// Run configuration and result

struct FixedC {
  double c = 1.0;
};

struct DynamicC {
  double initial_mean = 2.0;
  double initial_std = 1.0;
  DynamicCParams params;
};

using CPolicy = std::variant<FixedC, DynamicC>;

struct EarlyStopConfig {
  struct Level1 {
    bool enabled = false;
    double threshold = 1e-3;
    std::size_t window = 3;
  } level1;
  struct Level2 {
    bool enabled = false;
    double quantile = 0.0;
  } level2;
  bool level3 = false;
};

enum class ExecutionMode { deterministic, parallel };

struct RunConfig {
  std::size_t n = 16;
  std::size_t t_max = 5;
  std::size_t generation_iterations = 1;  // T_g
  CPolicy c_policy = FixedC{};
  SearcherConfig searcher;
  HistoryMode history_mode = HistoryMode::sibling_only;
  EarlyStopConfig early_stop;
  SelectionNoise selection_noise;
  std::uint64_t seed = 0;
  /// sibling_only parents of generation 1 also see the generation-0 history.
  bool seed_gen0_history = false;
  ExecutionMode mode = ExecutionMode::deterministic;
  /// Children trained concurrently in parallel mode.
  std::size_t parallelism = 1;
};

/// Throws ConfigError naming the offending field.
void validate(const RunConfig& config);

struct CurvePoint {
  std::size_t generation = 0;
  std::size_t epochs_consumed = 0;
  double best_seen_val = 0.0;
  double best_seen_test = 0.0;
  double wall_ms = 0.0;  // 0 in deterministic mode
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct DynamicCStep {
  std::size_t generation = 0;
  double c_a = 0.0;
  double c_b = 0.0;
  double winner = 0.0;
  double mean = 0.0;
  double std = 0.0;
  friend bool operator==(const DynamicCStep&, const DynamicCStep&) = default;
};

struct RunResult {
  AgentId best_agent;
  std::vector<HpVector> best_schedule;
  double best_val_loss = 0.0;
  double best_test_loss = 0.0;
  /// One point per completed generation (per trial for the non-adaptive baseline).
  std::vector<CurvePoint> curve;
  std::size_t total_epochs = 0;
  /// Distinct model states transferred per generation (1 for generation 0).
  std::vector<std::size_t> transfer_ledger;
  GenealogyTree tree;
  std::vector<DynamicCStep> dynamic_c;
  bool halted_early = false;
};

using ProgressCallback = std::function<void(const CurvePoint&)>;

/// One searcher call: the history a child's hyperparameters were drawn from.
struct SuggestEvent {
  std::size_t generation = 0;
  AgentId child;
  std::optional<AgentId> parent;
  const History* history = nullptr;
};

struct RunHooks {
  ProgressCallback progress;
  /// Called before every suggest, in suggestion order.
  std::function<void(const SuggestEvent&)> on_suggest;
};

/// Stream tags mixed into the run seed; exposed so a bare searcher loop can
/// reproduce a run's suggestion stream.
inline constexpr std::uint64_t kSearchStreamTag = 1;
inline constexpr std::uint64_t kSelectionStreamTag = 2;
inline constexpr std::uint64_t kDynamicCStreamTag = 3;

/// Genealogical population-based training. Every child is forked from its
/// parent (generation 0 from the initial model) with salt = its AgentId,
/// trained for T_g iterations subject to the enabled gates, evaluated and
/// recorded; the best-seen agent and its hyperparameter schedule are returned.
RunResult run(const RunConfig& config, const SearchSpace& space, Trainer& trainer,
              const ProgressCallback& progress = {});
RunResult run(const RunConfig& config, const SearchSpace& space, Trainer& trainer,
              const RunHooks& hooks);

/// Re-trains the lineage of `id` from trainer.init(seed) and returns the
/// final state.
TrainerState replay_state(Trainer& trainer, std::uint64_t seed, const GenealogyTree& tree,
                          AgentId id);

/// replay_state followed by an evaluation; reproduces the recorded evaluation
/// of a deterministic trainer.
Evaluation replay_lineage(Trainer& trainer, std::uint64_t seed, const GenealogyTree& tree,
                          AgentId id);

}  // namespace gpbt
