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
#include <numeric>

#include "gpbt/orchestrator.hpp"

namespace gpbt {

namespace {

long long raw_parent_count(std::size_t n, double c) {
  return std::llround(std::sqrt(static_cast<double>(n) / c));
}

}  // namespace

GenerationPlan plan_generation(std::size_t n, double c) {
  GenerationPlan plan;
  if (n == 0) {
    plan.parents = 0;
    return plan;
  }
  long long p = (c > 0.0 && std::isfinite(c)) ? raw_parent_count(n, c) : 1;
  p = std::clamp<long long>(p, 1, static_cast<long long>(n));
  plan.parents = static_cast<std::size_t>(p);
  const std::size_t base = n / plan.parents;
  const std::size_t remainder = n - base * plan.parents;
  plan.children_per_parent.assign(plan.parents, base);
  for (std::size_t i = 0; i < remainder; ++i) ++plan.children_per_parent[i];
  return plan;
}

bool c_fits_population(std::size_t n, double c) noexcept {
  if (n == 0 || !(c > 0.0) || !std::isfinite(c)) return false;
  const long long p = raw_parent_count(n, c);
  return p >= 1 && p <= static_cast<long long>(n);
}

std::vector<AgentId> select_parents(std::span<const Candidate> candidates, std::size_t p,
                                    const SelectionNoise& noise, Rng& rng) {
  std::vector<Candidate> pool(candidates.begin(), candidates.end());
  std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
    return a.val_loss < b.val_loss || (a.val_loss == b.val_loss && a.id < b.id);
  });
  p = std::min(p, pool.size());
  std::vector<AgentId> chosen;
  chosen.reserve(p);
  if (!noise.enabled) {
    for (std::size_t i = 0; i < p; ++i) chosen.push_back(pool[i].id);
    return chosen;
  }

  // Sequential draws without replacement; weights are shifted by the current
  // minimum so that tiny temperatures never underflow every weight at once.
  std::vector<double> weights(pool.size());
  while (chosen.size() < p) {
    const double floor_loss = pool.front().val_loss;
    double total = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      weights[i] = std::exp(-(pool[i].val_loss - floor_loss) / noise.temperature);
      total += weights[i];
    }
    double u = rng.uniform() * total;
    std::size_t pick = 0;
    for (; pick + 1 < pool.size(); ++pick) {
      if (u < weights[pick]) break;
      u -= weights[pick];
    }
    chosen.push_back(pool[pick].id);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    weights.pop_back();
  }
  // report in rank order
  std::sort(chosen.begin(), chosen.end(), [&](AgentId a, AgentId b) {
    const auto la = std::find_if(candidates.begin(), candidates.end(),
                                 [&](const Candidate& c) { return c.id == a; })->val_loss;
    const auto lb = std::find_if(candidates.begin(), candidates.end(),
                                 [&](const Candidate& c) { return c.id == b; })->val_loss;
    return la < lb || (la == lb && a < b);
  });
  return chosen;
}

std::vector<ChildSlot> schedule_children_for_level3(const GenerationPlan& plan,
                                                    std::span<const std::size_t> parent_ranks) {
  std::vector<std::size_t> by_rank(plan.children_per_parent.size());
  std::iota(by_rank.begin(), by_rank.end(), 0);
  if (parent_ranks.size() == by_rank.size()) {
    std::stable_sort(by_rank.begin(), by_rank.end(), [&](std::size_t a, std::size_t b) {
      return parent_ranks[a] < parent_ranks[b];
    });
  }
  std::vector<ChildSlot> order;
  for (std::size_t parent : by_rank) {
    for (std::size_t k = 0; k < plan.children_per_parent[parent]; ++k) {
      order.push_back({parent, k});
    }
  }
  return order;
}

}  // namespace gpbt
