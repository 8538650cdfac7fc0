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

#include "gpbt/searchers.hpp"
#include "gpbt/stats.hpp"

namespace gpbt {

std::optional<CmaState> cma_update(const SearchSpace& space, std::span<const Observation> tail) {
  if (tail.size() < kCmaMinElite) return std::nullopt;

  std::vector<std::size_t> order(tail.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return tail[a].loss < tail[b].loss; });
  // A one-point elite has no spread and pins sigma to the floor.
  const std::size_t elite = std::max((tail.size() + 3) / 4, kCmaMinElite);

  std::vector<UnitPoint> top;
  top.reserve(elite);
  for (std::size_t i = 0; i < elite; ++i) top.push_back(to_unit(space, tail[order[i]].hp));

  // rank weights elite, elite-1, ..., 1
  const double weight_sum = static_cast<double>(elite * (elite + 1)) / 2.0;
  CmaState state;
  state.mean.assign(space.size(), 0.0);
  state.sigma.assign(space.size(), 0.0);
  std::vector<double> column(elite);
  for (std::size_t j = 0; j < space.size(); ++j) {
    for (std::size_t i = 0; i < elite; ++i) {
      state.mean[j] += static_cast<double>(elite - i) * top[i][j];
      column[i] = top[i][j];
    }
    state.mean[j] /= weight_sum;
    state.sigma[j] = std::clamp(stats::population_std(column), kCmaSigmaMin, kCmaSigmaMax);
  }
  return state;
}

HpVector cma_sample(const SearchSpace& space, const CmaState& state, Rng& rng) {
  UnitPoint u(space.size());
  for (std::size_t j = 0; j < space.size(); ++j) {
    u[j] = state.mean[j] + state.sigma[j] * rng.normal();
  }
  return from_unit_clipped(space, u);
}

}  // namespace gpbt
