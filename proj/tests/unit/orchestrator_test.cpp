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

#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "gpbt/orchestrator.hpp"
#include "gpbt/stats.hpp"
#include "test_trainers.hpp"

namespace gpbt {
namespace {

const SearchSpace kSpace({Dimension{"lr", 1e-3, 0.5, Scale::log},
                          Dimension{"dropout", 0.0, 1.0, Scale::linear}});

SyntheticTrainer quadratic(std::uint64_t seed = 0, TrainerKind kind = TrainerKind::noisy_quadratic) {
  TrainerSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  spec.noise = 0.3;
  return SyntheticTrainer(spec, kSpace);
}

RunConfig small_config(std::size_t n = 9, std::size_t t_max = 4, double c = 1.0) {
  RunConfig rc;
  rc.n = n;
  rc.t_max = t_max;
  rc.generation_iterations = 3;
  rc.c_policy = FixedC{c};
  rc.seed = 5;
  return rc;
}

std::vector<Candidate> candidates_of(std::initializer_list<double> losses) {
  std::vector<Candidate> out;
  std::uint32_t id = 0;
  for (double l : losses) out.push_back({AgentId{id++}, l});
  return out;
}

std::vector<AgentId> ids(std::initializer_list<std::uint32_t> values) {
  std::vector<AgentId> out;
  for (auto v : values) out.push_back(AgentId{v});
  return out;
}

const double kCValues[] = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};

// ---------------------------------------------------------------------------
// plan_generation

TEST(PlanGenerationTest, PerfectSquareCases) {
  const auto a = plan_generation(4, 1);
  EXPECT_EQ(a.parents, 2u);
  EXPECT_EQ(a.children_per_parent, (std::vector<std::size_t>{2, 2}));
  const auto b = plan_generation(4, 4);
  EXPECT_EQ(b.parents, 1u);
  EXPECT_EQ(b.children_per_parent, (std::vector<std::size_t>{4}));
  EXPECT_EQ(plan_generation(25, 1).children_per_parent, std::vector<std::size_t>(5, 5));
  EXPECT_EQ(plan_generation(36, 1).children_per_parent, std::vector<std::size_t>(6, 6));
}

TEST(PlanGenerationTest, RoundsParentsForNonSquare) {
  const auto plan = plan_generation(72, 1);
  EXPECT_EQ(plan.parents, 8u);
  EXPECT_EQ(plan.children_per_parent, std::vector<std::size_t>(8, 9));
}

TEST(PlanGenerationTest, RemainderGoesToBestParents) {
  const auto plan = plan_generation(10, 1);  // round(3.16) = 3 parents
  EXPECT_EQ(plan.children_per_parent, (std::vector<std::size_t>{4, 3, 3}));
}

TEST(PlanGenerationTest, ClampsExtremeC) {
  EXPECT_EQ(plan_generation(1, 0.125).parents, 1u);
  EXPECT_EQ(plan_generation(3, 1e-6).parents, 3u);
  EXPECT_EQ(plan_generation(3, 1e6).parents, 1u);
  EXPECT_FALSE(c_fits_population(1, 0.125));
  EXPECT_TRUE(c_fits_population(4, 8));
  EXPECT_TRUE(c_fits_population(16, 0.125));
  EXPECT_FALSE(c_fits_population(4, 0.0));
}

TEST(PlanGenerationTest, PropertiesOverGrid) {
  for (std::size_t n = 1; n <= 200; ++n) {
    for (double c : kCValues) {
      const auto plan = plan_generation(n, c);
      const auto expected_p = std::clamp<long long>(std::llround(std::sqrt(n / c)), 1, static_cast<long long>(n));
      ASSERT_EQ(plan.parents, static_cast<std::size_t>(expected_p)) << n << " " << c;
      ASSERT_EQ(plan.children_per_parent.size(), plan.parents);
      std::size_t sum = 0;
      for (std::size_t i = 0; i < plan.parents; ++i) {
        ASSERT_GE(plan.children_per_parent[i], 1u);
        ASSERT_EQ(plan.children_per_parent[i], n / plan.parents + (i < n % plan.parents ? 1 : 0));
        sum += plan.children_per_parent[i];
      }
      ASSERT_EQ(sum, n) << n << " " << c;
    }
  }
}

// ---------------------------------------------------------------------------
// select_parents

TEST(SelectParentsTest, LowestLossesInRankOrder) {
  Rng rng(0);
  EXPECT_EQ(select_parents(candidates_of({0.3, 0.1, 0.2, 0.4}), 2, {}, rng), ids({1, 2}));
}

TEST(SelectParentsTest, TiesToLowerId) {
  Rng rng(0);
  EXPECT_EQ(select_parents(candidates_of({0.2, 0.1, 0.1, 0.1}), 2, {}, rng), ids({1, 2}));
}

TEST(SelectParentsTest, EveryoneWhenPExceedsPopulation) {
  Rng rng(0);
  EXPECT_EQ(select_parents(candidates_of({0.3, 0.1, 0.2}), 3, {}, rng), ids({1, 2, 0}));
  EXPECT_EQ(select_parents(candidates_of({0.3, 0.1}), 5, {}, rng), ids({1, 0}));
  EXPECT_TRUE(select_parents({}, 2, {}, rng).empty());
}

TEST(SelectParentsTest, InvariantUnderPositiveRescaling) {
  Rng data(3), rng(0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Candidate> a, b;
    for (std::uint32_t i = 0; i < 16; ++i) {
      const double l = data.uniform();
      a.push_back({AgentId{i}, l});
      b.push_back({AgentId{i}, l * 37.5});
    }
    ASSERT_EQ(select_parents(a, 4, {}, rng), select_parents(b, 4, {}, rng));
  }
}

TEST(SelectParentsTest, BoltzmannDistinctAndRankOrdered) {
  const auto cands = candidates_of({0.9, 0.1, 0.5, 0.3, 0.7, 0.2});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto chosen = select_parents(cands, 3, {true, 1.0}, rng);
    ASSERT_EQ(chosen.size(), 3u);
    ASSERT_EQ(std::set<AgentId>(chosen.begin(), chosen.end()).size(), 3u);
    for (std::size_t i = 1; i < chosen.size(); ++i) {
      ASSERT_LE(cands[chosen[i - 1].value].val_loss, cands[chosen[i].value].val_loss);
    }
  }
}

TEST(SelectParentsTest, BoltzmannColdLimitMatchesNoiseOff) {
  int identical = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng data(seed);
    std::vector<Candidate> cands;
    for (std::uint32_t i = 0; i < 12; ++i) cands.push_back({AgentId{i}, data.uniform()});
    Rng rng(seed + 1000);
    identical += select_parents(cands, 3, {true, 1e-9}, rng) == select_parents(cands, 3, {}, rng);
  }
  EXPECT_GE(identical, 99);
}

TEST(SelectParentsTest, BoltzmannHotLimitSpreadsSelection) {
  const auto cands = candidates_of({0.0, 1.0});
  int worse_picked = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    Rng rng(seed);
    worse_picked += select_parents(cands, 1, {true, 1e6}, rng)[0].value == 1;
  }
  EXPECT_GT(worse_picked, 150);
  EXPECT_LT(worse_picked, 250);
}

// ---------------------------------------------------------------------------
// Gates

TEST(MedianGateTest, Examples) {
  EXPECT_EQ(median_gate({}, 100.0), MedianDecision::keep_training);
  const std::vector<double> one = {0.5};
  EXPECT_EQ(median_gate(one, 0.6), MedianDecision::early_stop);
  EXPECT_EQ(median_gate(one, 0.5), MedianDecision::keep_training);
  const std::vector<double> four = {0.8, 0.2, 0.6, 0.4};
  EXPECT_EQ(median_gate(four, 0.55), MedianDecision::early_stop);
  EXPECT_EQ(median_gate(four, 0.5), MedianDecision::keep_training);
  EXPECT_EQ(median_gate(four, 0.45), MedianDecision::keep_training);
}

TEST(MedianGateTest, MatchesSortedMedianOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> prior(1 + rng.index(9));
    for (auto& x : prior) x = std::round(rng.uniform() * 10) / 10;
    const double cand = std::round(rng.uniform() * 10) / 10;
    std::vector<double> sorted = prior;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double med = m % 2 ? sorted[m / 2] : (sorted[m / 2 - 1] + sorted[m / 2]) / 2;
    ASSERT_EQ(median_gate(prior, cand) == MedianDecision::early_stop, cand > med);
  }
}

TEST(ConvergenceGateTest, Examples) {
  const std::vector<double> flat = {1.0, 1.0, 1.0, 1.0};
  EXPECT_EQ(convergence_gate(flat, 1e-6, 3), RunDecision::halt_run);
  const std::vector<double> improving = {1.0, 0.9, 0.8, 0.7, 0.6};
  EXPECT_EQ(convergence_gate(improving, 0.01, 3), RunDecision::keep_going);
  const std::vector<double> slowing = {1.0, 0.5, 0.49, 0.485};
  EXPECT_EQ(convergence_gate(slowing, 0.01, 2), RunDecision::halt_run);
  EXPECT_EQ(convergence_gate(slowing, 0.01, 3), RunDecision::keep_going);  // mean 0.505
}

TEST(ConvergenceGateTest, ShortSeriesKeepsGoing) {
  const std::vector<double> s = {1.0, 1.0, 1.0};
  EXPECT_EQ(convergence_gate(s, 0.1, 3), RunDecision::keep_going);
}

TEST(SatisfactionGateTest, Examples) {
  const std::vector<double> prev = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const std::vector<double> at_025 = {0.25};
  const std::vector<double> at_02 = {0.2};
  EXPECT_EQ(satisfaction_gate(at_025, prev, 0.1), GenerationDecision::keep_going);
  EXPECT_EQ(satisfaction_gate(at_02, prev, 0.1), GenerationDecision::end_generation);
  const std::vector<double> beats = {0.19};
  EXPECT_EQ(satisfaction_gate(beats, prev, 0.0), GenerationDecision::end_generation);
  EXPECT_EQ(satisfaction_gate(beats, {}, 0.5), GenerationDecision::keep_going);
}

TEST(EarlyEvalLedgerTest, ConcurrentSubmissionsAllRecorded) {
  EarlyEvalLedger ledger;
  std::vector<std::thread> threads;
  std::atomic<int> stops{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int k = 0; k < 100; ++k) {
        if (ledger.submit(t * 100 + k) == MedianDecision::early_stop) ++stops;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ledger.snapshot().size(), 800u);
  EXPECT_GT(stops.load(), 0);
}

TEST(ScheduleChildrenTest, ParentRankThenCreationOrder) {
  GenerationPlan plan{2, {2, 2}};
  const std::vector<std::size_t> ranks = {1, 0};  // plan parent 1 is the best
  const std::vector<ChildSlot> expected = {{1, 0}, {1, 1}, {0, 0}, {0, 1}};
  EXPECT_EQ(schedule_children_for_level3(plan, ranks), expected);

  GenerationPlan single{1, {3}};
  const std::vector<std::size_t> r0 = {0};
  const std::vector<ChildSlot> in_order = {{0, 0}, {0, 1}, {0, 2}};
  EXPECT_EQ(schedule_children_for_level3(single, r0), in_order);
}

// ---------------------------------------------------------------------------
// Dynamic c

TEST(DynamicCTest, HalvesOnSmallDeviation) {
  const auto s = dynamic_c_update({2.0, 1.0, 2.0}, 2.1, 16);
  EXPECT_DOUBLE_EQ(s.mean, 2.1);
  EXPECT_DOUBLE_EQ(s.std, 0.5);
  EXPECT_DOUBLE_EQ(s.last_best_c, 2.1);
}

TEST(DynamicCTest, DoublesOnLargeDeviation) {
  const auto s = dynamic_c_update({2.0, 1.0, 2.0}, 4.0, 16);
  EXPECT_DOUBLE_EQ(s.mean, 4.0);
  EXPECT_DOUBLE_EQ(s.std, 2.0);
}

TEST(DynamicCTest, KeepsStdInBetween) {
  EXPECT_DOUBLE_EQ(dynamic_c_update({2.0, 1.0, 2.0}, 3.0, 16).std, 1.0);
}

TEST(DynamicCTest, EqualSamplesHalveStd) {
  DynamicCState s{2.0, 1.0, 2.0};
  const auto next = dynamic_c_update(s, s.mean, 16);
  EXPECT_DOUBLE_EQ(next.mean, 2.0);
  EXPECT_DOUBLE_EQ(next.std, 0.5);
}

TEST(DynamicCTest, StdClampedToBounds) {
  EXPECT_DOUBLE_EQ(dynamic_c_update({2.0, 0.06, 2.0}, 2.0, 16).std, 0.05);
  EXPECT_DOUBLE_EQ(dynamic_c_update({2.0, 3.0, 2.0}, 8.0 + 2.0 * 3.0, 4).std, 4.0);
}

TEST(DynamicCTest, SamplesStayInValidRange) {
  const auto [lo, hi] = dynamic_c_range(16);
  EXPECT_DOUBLE_EQ(lo, 1.0 / 8);
  EXPECT_DOUBLE_EQ(hi, 8.0);
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const auto [a, b] = dynamic_c_sample({2.0, 50.0, 2.0}, 16, rng);
    ASSERT_TRUE(a >= lo && a <= hi && b >= lo && b <= hi);
    for (double c : {a, b}) {
      const auto plan = plan_generation(8, c);
      ASSERT_GE(plan.parents, 1u);
      ASSERT_GE(plan.children_per_parent.back(), 1u);
    }
  }
}

// ---------------------------------------------------------------------------
// Configuration

TEST(RunConfigTest, ValidationNamesField) {
  auto field_of = [](RunConfig rc) -> std::string {
    try {
      validate(rc);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return "";
  };
  EXPECT_EQ(field_of(small_config()), "");
  RunConfig rc = small_config();
  rc.n = 0;
  EXPECT_EQ(field_of(rc), "n");
  rc = small_config();
  rc.t_max = 0;
  EXPECT_EQ(field_of(rc), "t_max");
  rc = small_config();
  rc.generation_iterations = 0;
  EXPECT_EQ(field_of(rc), "T_g");
  rc = small_config();
  rc.c_policy = FixedC{-1.0};
  EXPECT_EQ(field_of(rc), "c");
  rc = small_config();
  rc.n = 1;
  rc.c_policy = DynamicC{};
  EXPECT_EQ(field_of(rc), "c");
  rc = small_config();
  rc.searcher.gamma = 2.0;
  EXPECT_EQ(field_of(rc), "searcher");
  rc = small_config();
  rc.early_stop.level2 = {true, 1.5};
  EXPECT_EQ(field_of(rc), "early_stop.level2.quantile");
  rc = small_config();
  rc.selection_noise = {true, 0.0};
  EXPECT_EQ(field_of(rc), "selection_noise.temperature");
  rc = small_config();
  rc.parallelism = 0;
  EXPECT_EQ(field_of(rc), "parallelism");
}

// ---------------------------------------------------------------------------
// run

TEST(RunTest, TwentyFiveByTenRecordsEveryEvaluation) {
  auto tr = quadratic();
  RunConfig rc = small_config(25, 10, 1.0);
  rc.generation_iterations = 1;
  const auto r = run(rc, kSpace, tr);
  EXPECT_EQ(r.tree.size(), 250u);
  EXPECT_EQ(r.total_epochs, 250u);
  EXPECT_EQ(r.curve.size(), 10u);
  EXPECT_EQ(r.transfer_ledger.size(), 10u);
  EXPECT_EQ(r.transfer_ledger[0], 1u);
  for (std::size_t g = 1; g < 10; ++g) EXPECT_EQ(r.transfer_ledger[g], 5u);
  for (std::size_t g = 0; g < 10; ++g) EXPECT_EQ(r.tree.generation_members(g).size(), 25u);
}

TEST(RunTest, DeterministicRunsAreIdentical) {
  for (auto kind : {SearcherKind::random, SearcherKind::tpe, SearcherKind::cma, SearcherKind::gp_ucb}) {
    auto tr = quadratic();
    RunConfig rc = small_config();
    rc.searcher.kind = kind;
    rc.early_stop.level3 = true;
    const auto a = run(rc, kSpace, tr);
    const auto b = run(rc, kSpace, tr);
    EXPECT_EQ(a.tree.records(), b.tree.records()) << to_string(kind);
    EXPECT_EQ(a.curve, b.curve);
    EXPECT_EQ(a.best_schedule, b.best_schedule);
    EXPECT_EQ(a.transfer_ledger, b.transfer_ledger);
  }
}

TEST(RunTest, ResultInvariants) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto tr = quadratic(seed);
    RunConfig rc = small_config(16, 5, 0.5 + seed % 4);
    rc.seed = seed;
    rc.early_stop.level3 = seed % 2 == 0;
    const auto r = run(rc, kSpace, tr);
    for (std::size_t i = 1; i < r.curve.size(); ++i) {
      ASSERT_LE(r.curve[i].best_seen_val, r.curve[i - 1].best_seen_val);
      ASSERT_GE(r.curve[i].epochs_consumed, r.curve[i - 1].epochs_consumed);
    }
    ASSERT_EQ(r.best_schedule.size(), r.tree.at(r.best_agent).generation + 1);
    ASSERT_EQ(r.best_val_loss, r.tree.at(*r.tree.best_overall()).val_loss);
    ASSERT_EQ(r.curve.back().best_seen_val, r.best_val_loss);
    ASSERT_EQ(r.curve.back().epochs_consumed, r.total_epochs);
    const std::size_t p = plan_generation(rc.n, std::get<FixedC>(rc.c_policy).c).parents;
    for (std::size_t g = 1; g < r.transfer_ledger.size(); ++g) ASSERT_EQ(r.transfer_ledger[g], p);
    for (const auto& rec : r.tree.records()) {
      ASSERT_LE(rec.epochs_trained, rc.generation_iterations);
      if (rec.early_stopped) ASSERT_LT(rec.epochs_trained, rc.generation_iterations);
      if (rec.parent) ASSERT_TRUE(r.tree.is_selected(*rec.parent));
      ASSERT_FALSE(validate(kSpace, rec.hp).has_value());
    }
    for (std::size_t g = 0; g < rc.t_max; ++g) ASSERT_EQ(r.tree.generation_members(g).size(), rc.n);
  }
}

TEST(RunTest, ChildrenFollowThePlan) {
  auto tr = quadratic();
  RunConfig rc = small_config(10, 3, 1.0);
  const auto r = run(rc, kSpace, tr);
  for (std::size_t g = 1; g < 3; ++g) {
    const auto parents = r.tree.selected_from(g - 1);
    ASSERT_EQ(parents.size(), 3u);
    std::map<AgentId, std::size_t> counts;
    for (AgentId id : r.tree.generation_members(g)) ++counts[*r.tree.at(id).parent];
    EXPECT_EQ(counts[parents[0]], 4u);
    EXPECT_EQ(counts[parents[1]], 3u);
    EXPECT_EQ(counts[parents[2]], 3u);
    // parents are the best of the previous generation, in rank order
    Rng unused(0);
    std::vector<Candidate> cands;
    for (AgentId id : r.tree.generation_members(g - 1)) cands.push_back({id, r.tree.at(id).val_loss});
    const auto expected = select_parents(cands, 3, {}, unused);
    EXPECT_TRUE(std::equal(parents.begin(), parents.end(), expected.begin(), expected.end()));
  }
}

TEST(RunTest, SingleGenerationReducesToBareSearcherLoop) {
  for (auto kind : {SearcherKind::random, SearcherKind::tpe, SearcherKind::cma, SearcherKind::gp_ucb}) {
    auto tr = quadratic();
    RunConfig rc = small_config(20, 1);
    rc.seed = 0;
    rc.searcher.kind = kind;
    const auto r = run(rc, kSpace, tr);
    Rng rng(derive_seed(0, kSearchStreamTag));
    History h;
    for (const auto& rec : r.tree.records()) {
      ASSERT_EQ(suggest(rc.searcher, kSpace, h, rng), rec.hp) << to_string(kind) << " " << rec.id.value;
      h.add(rec.hp, rec.val_loss);
    }
  }
}

TEST(RunTest, HistoriesFollowTheirMode) {
  for (auto mode : {HistoryMode::sibling_only, HistoryMode::time_enriched}) {
    auto tr = quadratic();
    RunConfig rc = small_config(9, 4);
    rc.history_mode = mode;
    std::vector<std::pair<SuggestEvent, History>> events;
    RunHooks hooks;
    hooks.on_suggest = [&](const SuggestEvent& e) { events.push_back({e, *e.history}); };
    const auto r = run(rc, kSpace, tr, hooks);
    ASSERT_EQ(events.size(), r.tree.size());
    for (const auto& [e, h] : events) {
      ASSERT_EQ(r.tree.at(e.child).parent, e.parent);
      History expected;
      for (const auto& rec : r.tree.records()) {
        if (rec.id >= e.child) break;
        const bool sibling = rec.generation == e.generation && rec.parent == e.parent;
        bool include = sibling;
        if (mode == HistoryMode::time_enriched && e.parent && !sibling) {
          const auto chain = r.tree.ancestry(*e.parent);
          include = rec.generation < e.generation &&
                    (!rec.parent || std::find(chain.begin(), chain.end(), *rec.parent) != chain.end());
        }
        if (include) expected.add(rec.hp, rec.val_loss);
      }
      ASSERT_EQ(h, expected) << to_string(mode) << " child " << e.child.value;
    }
  }
}

TEST(RunTest, SeedGenZeroHistoryPrependsGenerationZero) {
  auto tr = quadratic();
  RunConfig rc = small_config(4, 2);
  rc.seed_gen0_history = true;
  std::vector<std::size_t> sizes;
  RunHooks hooks;
  hooks.on_suggest = [&](const SuggestEvent& e) {
    if (e.generation == 1) sizes.push_back(e.history->size());
  };
  run(rc, kSpace, tr, hooks);
  EXPECT_EQ(sizes, (std::vector<std::size_t>{4, 5, 4, 5}));
}

TEST(RunTest, LevelThreeInertWithSingleIteration) {
  auto tr = quadratic();
  RunConfig rc = small_config(16, 4);
  rc.generation_iterations = 1;
  rc.early_stop.level3 = true;
  const auto r = run(rc, kSpace, tr);
  for (const auto& rec : r.tree.records()) ASSERT_FALSE(rec.early_stopped);
  EXPECT_EQ(r.total_epochs, 64u);
}

TEST(RunTest, LevelThreeIidMeanEpochs) {
  testing::IidTrainer tr;
  RunConfig rc = small_config(25, 8);
  rc.generation_iterations = 5;
  rc.searcher.kind = SearcherKind::random;
  rc.early_stop.level3 = true;
  std::size_t children = 0, epochs = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    rc.seed = seed;
    const auto r = run(rc, kSpace, tr);
    children += r.tree.size();
    epochs += r.total_epochs;
    for (const auto& rec : r.tree.records()) ASSERT_EQ(rec.early_stopped, rec.epochs_trained == 1);
  }
  ASSERT_GE(children, 1000u);
  const double mean = static_cast<double>(epochs) / static_cast<double>(children);
  EXPECT_GE(mean, 2.4);
  EXPECT_LE(mean, 3.3);
}

TEST(RunTest, LevelTwoSkipsRemainingChildren) {
  testing::IidTrainer tr;
  RunConfig rc = small_config(16, 4);
  rc.early_stop.level2 = {true, 0.5};
  const auto r = run(rc, kSpace, tr);
  EXPECT_EQ(r.tree.generation_members(0).size(), 16u);
  std::size_t later = 0;
  for (std::size_t g = 1; g < r.tree.generation_count(); ++g) later += r.tree.generation_members(g).size();
  EXPECT_LT(later, 48u);
  EXPECT_EQ(r.curve.size(), 4u);
}

TEST(RunTest, LevelOneHaltsFlatRun) {
  auto tr = quadratic();
  RunConfig rc = small_config(4, 10);
  rc.generation_iterations = 1;
  rc.searcher.kind = SearcherKind::random;
  rc.early_stop.level1 = {true, 1e9, 2};  // any improvement is too slow
  const auto r = run(rc, kSpace, tr);
  EXPECT_EQ(r.curve.size(), 3u);
  EXPECT_TRUE(r.halted_early);
}

TEST(RunTest, ProgressCalledPerGeneration) {
  auto tr = quadratic();
  std::vector<CurvePoint> seen;
  const auto r = run(small_config(), kSpace, tr, [&](const CurvePoint& p) { seen.push_back(p); });
  EXPECT_EQ(seen, r.curve);
  for (const auto& p : seen) EXPECT_EQ(p.wall_ms, 0.0);
}

TEST(RunTest, ReplayReproducesEveryRecord) {
  for (auto kind : {TrainerKind::noisy_quadratic, TrainerKind::phase_surrogate, TrainerKind::weight_sensitive}) {
    auto tr = quadratic(3, kind);
    RunConfig rc = small_config(9, 4);
    rc.early_stop.level3 = true;
    const auto r = run(rc, kSpace, tr);
    for (const auto& rec : r.tree.records()) {
      const auto eval = replay_lineage(tr, rc.seed, r.tree, rec.id);
      ASSERT_EQ(eval.val_loss, rec.val_loss) << to_string(kind) << " " << rec.id.value;
      ASSERT_EQ(eval.test_loss, rec.test_loss);
    }
    EXPECT_EQ(replay_lineage(tr, rc.seed, r.tree, r.best_agent).val_loss, r.best_val_loss);
  }
}

TEST(RunTest, TrainerFailureCarriesAgentContext) {
  auto inner = quadratic();
  testing::FailingTrainer tr(inner, 12);
  try {
    run(small_config(9, 3), kSpace, tr);
    FAIL() << "expected TrainerError";
  } catch (const TrainerError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("agent 11 (generation 1)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("injected failure"), std::string::npos) << msg;
  }
}

TEST(RunTest, ParallelModeKeepsBudgetAndInvariants) {
  auto tr = quadratic();
  RunConfig rc = small_config(16, 4);
  rc.mode = ExecutionMode::parallel;
  rc.parallelism = 4;
  rc.early_stop.level3 = true;
  const auto r = run(rc, kSpace, tr);
  EXPECT_EQ(r.tree.size(), 64u);
  for (std::size_t i = 1; i < r.curve.size(); ++i) EXPECT_LE(r.curve[i].best_seen_val, r.curve[i - 1].best_seen_val);
  for (const auto& rec : r.tree.records()) {
    ASSERT_EQ(replay_lineage(tr, rc.seed, r.tree, rec.id).val_loss, rec.val_loss);
  }
}

TEST(RunTest, ParallelFailureCarriesContext) {
  auto inner = quadratic();
  testing::FailingTrainer tr(inner, 5);
  RunConfig rc = small_config(8, 2);
  rc.mode = ExecutionMode::parallel;
  rc.parallelism = 4;
  EXPECT_THROW(run(rc, kSpace, tr), TrainerError);
}

TEST(RunTest, DynamicCTrajectory) {
  auto tr = quadratic();
  RunConfig rc = small_config(16, 6);
  rc.c_policy = DynamicC{};
  const auto r = run(rc, kSpace, tr);
  ASSERT_EQ(r.dynamic_c.size(), 5u);
  const auto [lo, hi] = dynamic_c_range(16);
  DynamicCState state{2.0, 1.0, 2.0};
  for (const auto& step : r.dynamic_c) {
    ASSERT_TRUE(step.c_a >= lo && step.c_a <= hi);
    ASSERT_TRUE(step.winner == step.c_a || step.winner == step.c_b);
    state = dynamic_c_update(state, step.winner, 16);
    ASSERT_DOUBLE_EQ(step.mean, state.mean);
    ASSERT_DOUBLE_EQ(step.std, state.std);
    ASSERT_TRUE(step.std >= 0.05 && step.std <= 16);
  }
  for (std::size_t g = 0; g < 6; ++g) EXPECT_EQ(r.tree.generation_members(g).size(), 16u);
}

TEST(RunTest, SelectionNoiseStillProducesValidRun) {
  auto tr = quadratic();
  RunConfig rc = small_config(9, 4);
  rc.selection_noise = {true, 0.05};
  const auto r = run(rc, kSpace, tr);
  EXPECT_EQ(r.tree.size(), 36u);
  for (std::size_t g = 1; g < 4; ++g) EXPECT_EQ(r.transfer_ledger[g], 3u);
}

}  // namespace
}  // namespace gpbt
