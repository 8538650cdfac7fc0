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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gpbt/hp_space.hpp"
#include "gpbt/searchers.hpp"

namespace gpbt {

/// Unique per run, assigned in creation (= evaluation) order starting at 0.
struct AgentId {
  std::uint32_t value = 0;
  friend auto operator<=>(const AgentId&, const AgentId&) = default;
};

struct AgentRecord {
  AgentId id;
  std::optional<AgentId> parent;  // nullopt: child of the initial model
  std::size_t generation = 0;
  HpVector hp;
  double val_loss = 0.0;
  double test_loss = 0.0;
  std::size_t epochs_trained = 1;
  bool early_stopped = false;
  friend bool operator==(const AgentRecord&, const AgentRecord&) = default;
};

enum class HistoryMode { time_enriched, sibling_only };

std::string_view to_string(HistoryMode mode) noexcept;
std::optional<HistoryMode> parse_history_mode(std::string_view text) noexcept;

class GenealogyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Append-only ancestry of a population. Records are immutable once added;
/// a record may only cite a parent that was selected from the previous
/// generation via mark_parents.
class GenealogyTree {
 public:
  AgentId next_id() const noexcept { return AgentId{static_cast<std::uint32_t>(records_.size())}; }

  AgentId record_child(std::optional<AgentId> parent, std::size_t generation, HpVector hp,
                       double val_loss, double test_loss, std::size_t epochs_trained,
                       bool early_stopped);

  /// Registers `parents` (rank order) as selected from `generation` to seed
  /// generation + 1. Calling it again for the same generation appends.
  void mark_parents(std::size_t generation, std::span<const AgentId> parents);
  bool is_selected(AgentId id) const;
  /// Parents selected from `generation`, in the order they were marked.
  std::span<const AgentId> selected_from(std::size_t generation) const;

  bool contains(AgentId id) const noexcept { return id.value < records_.size(); }
  const AgentRecord& at(AgentId id) const;
  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<AgentRecord>& records() const noexcept { return records_; }
  /// Number of generations with at least one record.
  std::size_t generation_count() const noexcept;
  std::vector<AgentId> generation_members(std::size_t generation) const;

  /// Root-first chain of ids ending at `id`; length generation(id) + 1.
  std::vector<AgentId> ancestry(AgentId id) const;
  /// Hyperparameters along ancestry(id), root-first.
  std::vector<HpVector> schedule(AgentId id) const;
  /// Lowest val_loss in `generation`, ties to the lower id.
  AgentId best_agent(std::size_t generation) const;
  /// Lowest val_loss over all records, ties to the lower id.
  std::optional<AgentId> best_overall() const;

  /// History handed to the searcher for a child of `parent`.
  ///  - time_enriched: every recorded child (up to the parent's generation)
  ///    whose parent is the initial model or lies on ancestry(parent), in
  ///    evaluation order, followed by `within_generation`.
  ///  - sibling_only: exactly `within_generation`; when `seed_gen0` is set and
  ///    the parent is in generation 0, the generation-0 observations come first.
  History lineage_history(AgentId parent, HistoryMode mode, const History& within_generation,
                          bool seed_gen0 = false) const;
  /// Every recorded observation in evaluation order.
  History all_observations() const;

  /// One JSON object per line per agent, in id order.
  std::string to_ndjson() const;
  /// Rebuilds a tree from to_ndjson output; parents are re-marked from the
  /// references the records carry.
  static GenealogyTree from_ndjson(std::string_view text);

 private:
  std::vector<AgentRecord> records_;
  std::vector<std::vector<AgentId>> selected_;  // indexed by generation
  std::vector<bool> selected_flag_;             // indexed by id
};

}  // namespace gpbt

template <>
struct std::hash<gpbt::AgentId> {
  std::size_t operator()(const gpbt::AgentId& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
