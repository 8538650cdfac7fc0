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

#include "gpbt/genealogy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace gpbt {

namespace {

std::string id_str(AgentId id) { return std::to_string(id.value); }

}  // namespace

std::string_view to_string(HistoryMode mode) noexcept {
  return mode == HistoryMode::time_enriched ? "time_enriched" : "sibling_only";
}

std::optional<HistoryMode> parse_history_mode(std::string_view text) noexcept {
  if (text == "time_enriched" || text == "time-enriched") return HistoryMode::time_enriched;
  if (text == "sibling_only" || text == "sibling-only") return HistoryMode::sibling_only;
  return std::nullopt;
}

AgentId GenealogyTree::record_child(std::optional<AgentId> parent, std::size_t generation,
                                    HpVector hp, double val_loss, double test_loss,
                                    std::size_t epochs_trained, bool early_stopped) {
  if (parent) {
    if (!contains(*parent)) throw GenealogyError("unknown parent " + id_str(*parent));
    const auto& p = records_[parent->value];
    if (generation != p.generation + 1) {
      throw GenealogyError("generation " + std::to_string(generation) + " inconsistent with parent " +
                           id_str(*parent) + " of generation " + std::to_string(p.generation));
    }
    if (!is_selected(*parent)) {
      throw GenealogyError("agent " + id_str(*parent) + " was not selected as a parent");
    }
  } else if (generation != 0) {
    throw GenealogyError("only generation-0 children may descend from the initial model");
  }
  if (epochs_trained < 1) throw GenealogyError("epochs_trained must be >= 1");
  if (!std::isfinite(val_loss) || !std::isfinite(test_loss)) {
    throw GenealogyError("losses must be finite");
  }

  const AgentId id = next_id();
  records_.push_back(AgentRecord{id, parent, generation, std::move(hp), val_loss, test_loss,
                                 epochs_trained, early_stopped});
  selected_flag_.push_back(false);
  return id;
}

void GenealogyTree::mark_parents(std::size_t generation, std::span<const AgentId> parents) {
  for (AgentId id : parents) {
    if (!contains(id)) throw GenealogyError("cannot select unknown agent " + id_str(id));
    if (records_[id.value].generation != generation) {
      throw GenealogyError("agent " + id_str(id) + " is not in generation " +
                           std::to_string(generation));
    }
  }
  if (selected_.size() <= generation) selected_.resize(generation + 1);
  for (AgentId id : parents) {
    if (selected_flag_[id.value]) continue;
    selected_flag_[id.value] = true;
    selected_[generation].push_back(id);
  }
}

bool GenealogyTree::is_selected(AgentId id) const {
  return contains(id) && selected_flag_[id.value];
}

std::span<const AgentId> GenealogyTree::selected_from(std::size_t generation) const {
  if (generation >= selected_.size()) return {};
  return selected_[generation];
}

const AgentRecord& GenealogyTree::at(AgentId id) const {
  if (!contains(id)) throw GenealogyError("unknown agent " + id_str(id));
  return records_[id.value];
}

std::size_t GenealogyTree::generation_count() const noexcept {
  std::size_t g = 0;
  for (const auto& r : records_) g = std::max(g, r.generation + 1);
  return g;
}

std::vector<AgentId> GenealogyTree::generation_members(std::size_t generation) const {
  std::vector<AgentId> ids;
  for (const auto& r : records_) {
    if (r.generation == generation) ids.push_back(r.id);
  }
  return ids;
}

std::vector<AgentId> GenealogyTree::ancestry(AgentId id) const {
  std::vector<AgentId> chain;
  std::optional<AgentId> cur = id;
  while (cur) {
    const auto& r = at(*cur);
    chain.push_back(r.id);
    cur = r.parent;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::vector<HpVector> GenealogyTree::schedule(AgentId id) const {
  std::vector<HpVector> out;
  for (AgentId a : ancestry(id)) out.push_back(records_[a.value].hp);
  return out;
}

AgentId GenealogyTree::best_agent(std::size_t generation) const {
  const AgentRecord* best = nullptr;
  for (const auto& r : records_) {
    if (r.generation != generation) continue;
    if (!best || r.val_loss < best->val_loss) best = &r;
  }
  if (!best) throw GenealogyError("generation " + std::to_string(generation) + " has no records");
  return best->id;
}

std::optional<AgentId> GenealogyTree::best_overall() const {
  const AgentRecord* best = nullptr;
  for (const auto& r : records_) {
    if (!best || r.val_loss < best->val_loss) best = &r;
  }
  if (!best) return std::nullopt;
  return best->id;
}

History GenealogyTree::lineage_history(AgentId parent, HistoryMode mode,
                                       const History& within_generation, bool seed_gen0) const {
  const auto& p = at(parent);
  if (!is_selected(parent)) {
    throw GenealogyError("agent " + id_str(parent) + " is not a selected parent");
  }

  History history;
  if (mode == HistoryMode::time_enriched) {
    std::vector<bool> on_line(records_.size(), false);
    for (AgentId a : ancestry(parent)) on_line[a.value] = true;
    for (const auto& r : records_) {
      if (r.generation > p.generation) continue;
      if (!r.parent || on_line[r.parent->value]) history.add(r.hp, r.val_loss);
    }
  } else if (seed_gen0 && p.generation == 0) {
    for (const auto& r : records_) {
      if (r.generation == 0) history.add(r.hp, r.val_loss);
    }
  }
  for (const auto& obs : within_generation.observations) history.observations.push_back(obs);
  return history;
}

History GenealogyTree::all_observations() const {
  History history;
  for (const auto& r : records_) history.add(r.hp, r.val_loss);
  return history;
}

std::string GenealogyTree::to_ndjson() const {
  std::ostringstream out;
  for (const auto& r : records_) {
    nlohmann::ordered_json j;
    j["id"] = r.id.value;
    j["parent"] = r.parent ? nlohmann::ordered_json(r.parent->value) : nlohmann::ordered_json();
    j["generation"] = r.generation;
    j["hp"] = r.hp.values;
    j["val_loss"] = r.val_loss;
    j["test_loss"] = r.test_loss;
    j["epochs_trained"] = r.epochs_trained;
    j["early_stopped"] = r.early_stopped;
    out << j.dump() << '\n';
  }
  return out.str();
}

GenealogyTree GenealogyTree::from_ndjson(std::string_view text) {
  GenealogyTree tree;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      std::optional<AgentId> parent;
      if (!j.at("parent").is_null()) parent = AgentId{j.at("parent").get<std::uint32_t>()};
      const auto id = AgentId{j.at("id").get<std::uint32_t>()};
      if (id != tree.next_id()) {
        throw GenealogyError("record ids must be consecutive from 0");
      }
      if (parent && tree.contains(*parent) && !tree.is_selected(*parent)) {
        const AgentId ids[] = {*parent};
        tree.mark_parents(tree.at(*parent).generation, ids);
      }
      tree.record_child(parent, j.at("generation").get<std::size_t>(),
                        HpVector{j.at("hp").get<std::vector<double>>()},
                        j.at("val_loss").get<double>(), j.at("test_loss").get<double>(),
                        j.at("epochs_trained").get<std::size_t>(),
                        j.at("early_stopped").get<bool>());
    } catch (const nlohmann::json::exception& e) {
      throw GenealogyError("genealogy line " + std::to_string(line_no) + ": " + e.what());
    } catch (const GenealogyError& e) {
      throw GenealogyError("genealogy line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return tree;
}

}  // namespace gpbt
