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

#include "gpbt/orchestrator.hpp"

namespace gpbt {

std::pair<double, double> dynamic_c_range(std::size_t n) {
  const double m = static_cast<double>(std::max<std::size_t>(n / 2, 1));
  return {1.0 / m, m};
}

std::pair<double, double> dynamic_c_sample(const DynamicCState& state, std::size_t n, Rng& rng) {
  const auto [lo, hi] = dynamic_c_range(n);
  const double a = std::clamp(state.mean + state.std * rng.normal(), lo, hi);
  const double b = std::clamp(state.mean + state.std * rng.normal(), lo, hi);
  return {a, b};
}

DynamicCState dynamic_c_update(const DynamicCState& state, double winner_c, std::size_t n,
                               const DynamicCParams& params) {
  DynamicCState next = state;
  const double deviation = std::abs(winner_c - state.mean);
  if (deviation < params.small_interval * state.std) {
    next.std = state.std / 2.0;
  } else if (deviation > params.large_interval * state.std) {
    next.std = state.std * 2.0;
  }
  next.std = std::clamp(next.std, params.std_min, std::max(static_cast<double>(n), params.std_min));
  next.mean = winner_c;
  next.last_best_c = winner_c;
  return next;
}

}  // namespace gpbt
