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

#include <cmath>
#include <limits>

#include "gpbt/trainers.hpp"

namespace gpbt {

namespace {

struct Search {
  const SyntheticTrainer& trainer;
  std::span<const double> rates;
  std::size_t t_max;
  std::size_t iterations;
  int latent;

  std::vector<std::size_t> current;
  std::vector<std::size_t> best;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t enumerated = 0;

  // Depth-first over phases, carrying the second moments of the prefix.
  void visit(const std::vector<double>& moments) {
    const std::size_t depth = current.size();
    if (depth == t_max) {
      ++enumerated;
      double loss = 0.0;
      for (std::size_t i = 0; i < moments.size(); ++i) loss += trainer.curvatures()[i] * moments[i];
      if (!std::isfinite(loss)) loss = std::numeric_limits<double>::max();
      if (loss < best_loss) {
        best_loss = loss;
        best = current;
      }
      return;
    }
    const double s2 = trainer.noise() * trainer.noise();
    std::vector<double> next(moments.size());
    for (std::size_t g = 0; g < rates.size(); ++g) {
      const double r = trainer.effective_rate(rates[g], latent);
      for (std::size_t i = 0; i < moments.size(); ++i) {
        const double a = 1.0 - r * trainer.curvatures()[i];
        double m = moments[i];
        for (std::size_t k = 0; k < iterations; ++k) m = a * a * m + r * r * s2;
        next[i] = m;
      }
      current.push_back(g);
      visit(next);
      current.pop_back();
    }
  }
};

}  // namespace

ScheduleOracleResult brute_force_schedule(const TrainerSpec& spec, const SearchSpace& space,
                                          std::span<const HpVector> grid, std::size_t t_max,
                                          std::size_t iterations_per_phase, std::uint64_t seed) {
  if (grid.empty()) throw TrainerError("brute_force_schedule: empty grid");
  if (t_max == 0) throw TrainerError("brute_force_schedule: t_max must be >= 1");
  double count = 1.0;
  for (std::size_t t = 0; t < t_max; ++t) count *= static_cast<double>(grid.size());
  if (count > static_cast<double>(kOracleBudget)) {
    throw TrainerError("brute_force_schedule: " + std::to_string(grid.size()) + "^" +
                       std::to_string(t_max) + " schedules exceed the enumeration budget");
  }
  for (const auto& hp : grid) {
    if (auto v = validate(space, hp)) throw TrainerError("brute_force_schedule: " + v->message);
  }

  SyntheticTrainer trainer(spec, space);
  const TrainerState start = trainer.init(seed);
  std::vector<double> moments(start.weights);
  if (trainer.kind() != TrainerKind::phase_surrogate) {
    for (auto& w : moments) w = w * w;
  }
  std::vector<double> rates;
  for (const auto& hp : grid) rates.push_back(trainer.rate_of(hp));

  Search search{trainer, rates, t_max, iterations_per_phase, 1, {}, {}};
  search.visit(moments);

  ScheduleOracleResult result;
  for (std::size_t g : search.best) result.schedule.push_back(grid[g]);
  result.expected_loss = std::min(search.best_loss, 1e12);
  result.enumerated = search.enumerated;
  return result;
}

}  // namespace gpbt
