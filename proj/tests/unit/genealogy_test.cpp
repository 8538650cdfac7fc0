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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "gpbt/genealogy.hpp"

namespace gpbt {
namespace {

HpVector hp1(double x) { return HpVector{{x}}; }

// Random tree: `n` children per generation, `p` random parents selected
// from each generation, random losses (with deliberate ties).
GenealogyTree random_tree(std::uint64_t seed, std::size_t n, std::size_t p, std::size_t gens) {
  Rng rng(seed);
  GenealogyTree tree;
  std::vector<AgentId> prev;
  for (std::size_t g = 0; g < gens; ++g) {
    std::vector<AgentId> parents;
    if (g > 0) {
      std::vector<AgentId> pool = prev;
      std::shuffle(pool.begin(), pool.end(), rng.engine());
      parents.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(p, pool.size())));
      tree.mark_parents(g - 1, parents);
    }
    std::vector<AgentId> current;
    for (std::size_t k = 0; k < n; ++k) {
      std::optional<AgentId> parent;
      if (g > 0) parent = parents[rng.index(parents.size())];
      const double loss = static_cast<double>(rng.index(20)) / 10.0;
      current.push_back(tree.record_child(parent, g, hp1(rng.uniform()), loss, loss + 0.01, 1 + rng.index(3), false));
    }
    prev = current;
  }
  return tree;
}

// Independent oracle for time_enriched membership.
bool on_lineage(const GenealogyTree& tree, const AgentRecord& r, AgentId parent) {
  if (r.generation > tree.at(parent).generation) return false;
  if (!r.parent) return true;
  for (std::optional<AgentId> a = parent; a; a = tree.at(*a).parent) {
    if (*a == *r.parent) return true;
  }
  return false;
}

TEST(RecordChildTest, FirstRecordIsRootChild) {
  GenealogyTree tree;
  const AgentId id = tree.record_child(std::nullopt, 0, hp1(0.1), 1.0, 1.1, 1, false);
  EXPECT_EQ(id.value, 0u);
  EXPECT_EQ(tree.at(id).generation, 0u);
  EXPECT_FALSE(tree.at(id).parent.has_value());
  EXPECT_EQ(tree.next_id().value, 1u);
}

TEST(RecordChildTest, SelectedParentAccepted) {
  GenealogyTree tree;
  for (int k = 0; k < 3; ++k) tree.record_child(std::nullopt, 0, hp1(0.1), 1.0, 1.0, 1, false);
  const std::vector<AgentId> sel0 = {AgentId{1}};
  tree.mark_parents(0, sel0);
  const AgentId three = tree.record_child(AgentId{1}, 1, hp1(0.2), 0.5, 0.5, 1, false);
  ASSERT_EQ(three.value, 3u);
  const std::vector<AgentId> sel1 = {three};
  tree.mark_parents(1, sel1);
  const AgentId child = tree.record_child(three, 2, hp1(0.3), 0.4, 0.4, 1, false);
  EXPECT_EQ(tree.at(child).parent, three);
  EXPECT_EQ(tree.at(child).generation, 2u);
}

TEST(RecordChildTest, RejectsInconsistentRecords) {
  GenealogyTree tree;
  tree.record_child(std::nullopt, 0, hp1(0.1), 1.0, 1.0, 1, false);
  tree.record_child(std::nullopt, 0, hp1(0.1), 1.0, 1.0, 1, false);
  EXPECT_THROW(tree.record_child(AgentId{0}, 1, hp1(0.1), 1, 1, 1, false), GenealogyError);  // unselected
  const std::vector<AgentId> sel = {AgentId{0}};
  tree.mark_parents(0, sel);
  EXPECT_THROW(tree.record_child(AgentId{0}, 2, hp1(0.1), 1, 1, 1, false), GenealogyError);  // generation
  EXPECT_THROW(tree.record_child(AgentId{9}, 1, hp1(0.1), 1, 1, 1, false), GenealogyError);  // unknown
  EXPECT_THROW(tree.record_child(std::nullopt, 1, hp1(0.1), 1, 1, 1, false), GenealogyError);
  EXPECT_THROW(tree.record_child(AgentId{0}, 1, hp1(0.1), 1, 1, 0, false), GenealogyError);
  EXPECT_THROW(tree.record_child(AgentId{0}, 1, hp1(0.1), NAN, 1, 1, false), GenealogyError);
  const std::vector<AgentId> wrong_gen = {AgentId{1}};
  EXPECT_THROW(tree.mark_parents(1, wrong_gen), GenealogyError);
  EXPECT_EQ(tree.size(), 2u);
}

TEST(AncestryTest, RootChildAndChain) {
  GenealogyTree tree;
  for (int k = 0; k < 5; ++k) tree.record_child(std::nullopt, 0, hp1(k / 10.0), 1, 1, 1, false);
  const std::vector<AgentId> s0 = {AgentId{0}};
  tree.mark_parents(0, s0);
  for (int k = 0; k < 5; ++k) tree.record_child(AgentId{0}, 1, hp1(0.5), 1, 1, 1, false);
  const std::vector<AgentId> s1 = {AgentId{5}};
  tree.mark_parents(1, s1);
  for (int k = 0; k < 3; ++k) tree.record_child(AgentId{5}, 2, hp1(0.6 + k / 10.0), 1, 1, 1, false);
  EXPECT_EQ(tree.ancestry(AgentId{3}), std::vector<AgentId>{AgentId{3}});
  const std::vector<AgentId> chain = {AgentId{0}, AgentId{5}, AgentId{12}};
  EXPECT_EQ(tree.ancestry(AgentId{12}), chain);
  const auto sched = tree.schedule(AgentId{12});
  ASSERT_EQ(sched.size(), 3u);
  for (std::size_t g = 0; g < 3; ++g) EXPECT_EQ(sched[g], tree.at(chain[g]).hp);
  EXPECT_EQ(tree.schedule(AgentId{2}), std::vector<HpVector>{hp1(0.2)});
}

TEST(AncestryTest, LengthIsGenerationPlusOneOnRandomTrees) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto tree = random_tree(seed, 9, 3, 5);
    for (const auto& r : tree.records()) {
      const auto chain = tree.ancestry(r.id);
      ASSERT_EQ(chain.size(), r.generation + 1);
      ASSERT_EQ(chain.back(), r.id);
      ASSERT_EQ(tree.schedule(r.id).size(), r.generation + 1);
      for (std::size_t g = 0; g < chain.size(); ++g) ASSERT_EQ(tree.at(chain[g]).generation, g);
    }
  }
}

TEST(LineageHistoryTest, SiblingOnlyIsExactlyWithinGeneration) {
  const auto tree = random_tree(1, 4, 2, 2);
  const AgentId parent = tree.selected_from(0)[0];
  History within;
  within.add(hp1(0.1), 0.5);
  within.add(hp1(0.2), 0.4);
  EXPECT_EQ(tree.lineage_history(parent, HistoryMode::sibling_only, within), within);
}

TEST(LineageHistoryTest, SeedGenZeroPrependsRootChildren) {
  const auto tree = random_tree(2, 4, 2, 2);
  const AgentId parent = tree.selected_from(0)[0];
  History within;
  within.add(hp1(0.1), 0.5);
  const auto h = tree.lineage_history(parent, HistoryMode::sibling_only, within, true);
  ASSERT_EQ(h.size(), 5u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(h.observations[i].hp, tree.at(AgentId{static_cast<std::uint32_t>(i)}).hp);
  EXPECT_EQ(h.observations[4], within.observations[0]);
}

TEST(LineageHistoryTest, TimeEnrichedGenerationOne) {
  const auto tree = random_tree(3, 4, 2, 1);
  GenealogyTree t = tree;
  const std::vector<AgentId> sel = {AgentId{2}};
  t.mark_parents(0, sel);
  History within;
  within.add(hp1(0.9), 0.1);
  EXPECT_EQ(t.lineage_history(AgentId{2}, HistoryMode::time_enriched, within).size(), 5u);
}

TEST(LineageHistoryTest, TimeEnrichedThreeGenerationHandBuiltTree) {
  // n = 4, c = 1: two parents with two children each.
  GenealogyTree tree;
  for (int k = 0; k < 4; ++k) tree.record_child(std::nullopt, 0, hp1(k / 10.0), 1.0 - k / 10.0, 1, 1, false);
  const std::vector<AgentId> s0 = {AgentId{3}, AgentId{2}};
  tree.mark_parents(0, s0);
  tree.record_child(AgentId{3}, 1, hp1(0.5), 0.4, 1, 1, false);  // 4
  tree.record_child(AgentId{3}, 1, hp1(0.5), 0.3, 1, 1, false);  // 5
  tree.record_child(AgentId{2}, 1, hp1(0.5), 0.2, 1, 1, false);  // 6
  tree.record_child(AgentId{2}, 1, hp1(0.5), 0.1, 1, 1, false);  // 7
  const std::vector<AgentId> s1 = {AgentId{7}, AgentId{5}};
  tree.mark_parents(1, s1);

  for (AgentId parent : s1) {
    const auto h = tree.lineage_history(parent, HistoryMode::time_enriched, {});
    ASSERT_EQ(h.size(), 6u);
    std::size_t walk = 0;
    for (const auto& r : tree.records()) walk += on_lineage(tree, r, parent);
    EXPECT_EQ(walk, 6u);
  }
  const auto h = tree.lineage_history(AgentId{7}, HistoryMode::time_enriched, {});
  EXPECT_EQ(h.observations[4].loss, 0.2);
  EXPECT_EQ(h.observations[5].loss, 0.1);
}

TEST(LineageHistoryTest, TimeEnrichedMatchesExhaustiveWalkOnRandomTrees) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto tree = random_tree(seed, 9, 3, 4);
    for (std::size_t g = 0; g + 1 < tree.generation_count(); ++g) {
      for (AgentId parent : tree.selected_from(g)) {
        History expected;
        for (const auto& r : tree.records()) {
          if (on_lineage(tree, r, parent)) expected.add(r.hp, r.val_loss);
        }
        ASSERT_EQ(tree.lineage_history(parent, HistoryMode::time_enriched, {}), expected);
      }
    }
  }
}

TEST(LineageHistoryTest, UnselectedParentThrows) {
  const auto tree = random_tree(4, 4, 1, 1);
  EXPECT_THROW(tree.lineage_history(AgentId{0}, HistoryMode::sibling_only, {}), GenealogyError);
}

TEST(BestAgentTest, UniqueMinimumAndTieRule) {
  GenealogyTree tree;
  const double losses[] = {0.5, 0.4, 0.6, 0.45, 0.9, 0.7, 0.8, 0.1, 0.3, 0.1};
  for (double l : losses) tree.record_child(std::nullopt, 0, hp1(0.5), l, l, 1, false);
  EXPECT_EQ(tree.best_agent(0).value, 7u);
  EXPECT_EQ(tree.best_overall()->value, 7u);
  EXPECT_THROW(tree.best_agent(1), GenealogyError);
  EXPECT_FALSE(GenealogyTree{}.best_overall().has_value());
}

TEST(BestAgentTest, MatchesLinearScanOnRandomTrees) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto tree = random_tree(seed, 8, 2, 4);
    for (std::size_t g = 0; g < tree.generation_count(); ++g) {
      std::optional<AgentId> scan;
      for (const auto& r : tree.records()) {
        if (r.generation == g && (!scan || r.val_loss < tree.at(*scan).val_loss)) scan = r.id;
      }
      ASSERT_EQ(tree.best_agent(g), *scan);
    }
  }
}

TEST(SerializationTest, NdjsonRoundTripPreservesRecordsAndHistories) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto tree = random_tree(seed, 6, 2, 4);
    const std::string text = tree.to_ndjson();
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), tree.size());
    const auto back = GenealogyTree::from_ndjson(text);
    ASSERT_EQ(back.records(), tree.records());
    EXPECT_EQ(back.to_ndjson(), text);
    for (std::size_t g = 0; g + 1 < tree.generation_count(); ++g) {
      for (AgentId parent : tree.selected_from(g)) {
        if (!std::count_if(tree.records().begin(), tree.records().end(),
                           [&](const AgentRecord& r) { return r.parent == parent; })) {
          continue;  // a selected parent without children is not recoverable from records
        }
        ASSERT_EQ(back.lineage_history(parent, HistoryMode::time_enriched, {}),
                  tree.lineage_history(parent, HistoryMode::time_enriched, {}));
      }
    }
  }
}

TEST(SerializationTest, MalformedLineNamed) {
  const std::string good = random_tree(0, 1, 1, 1).to_ndjson();
  try {
    GenealogyTree::from_ndjson(good + "not json\n");
    FAIL() << "expected GenealogyError";
  } catch (const GenealogyError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(HistoryModeTest, ParsesNames) {
  EXPECT_EQ(parse_history_mode("sibling_only"), HistoryMode::sibling_only);
  EXPECT_EQ(parse_history_mode("time_enriched"), HistoryMode::time_enriched);
  EXPECT_FALSE(parse_history_mode("pooled").has_value());
}

}  // namespace
}  // namespace gpbt
