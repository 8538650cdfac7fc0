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
#include "searchers/internal.hpp"

namespace gpbt {

namespace {

constexpr double kMinBandwidth = 0.05;
constexpr double kDensityFloor = 1e-12;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Mean of product-Gaussian kernels centred at `points`.
double kde_density(std::span<const double> x, std::span<const UnitPoint> points,
                   std::span<const double> bandwidths) {
  double total = 0.0;
  for (const auto& p : points) {
    double k = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double z = (x[j] - p[j]) / bandwidths[j];
      k *= kInvSqrt2Pi / bandwidths[j] * std::exp(-0.5 * z * z);
    }
    total += k;
  }
  return total / static_cast<double>(points.size());
}

}  // namespace

TpeSplit tpe_split(const History& history, double gamma) {
  if (history.empty()) throw SearcherError("tpe_split: empty history");
  const std::size_t n = history.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return history.observations[a].loss < history.observations[b].loss;
  });
  const auto n_good = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(n) - 1e-12)), 1, n);
  std::vector<bool> is_good(n, false);
  for (std::size_t i = 0; i < n_good; ++i) is_good[order[i]] = true;

  TpeSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    (is_good[i] ? split.good : split.bad).observations.push_back(history.observations[i]);
  }
  return split;
}

std::vector<double> kde_bandwidths(std::span<const UnitPoint> points) {
  if (points.empty()) return {};
  const std::size_t d = points.front().size();
  const double factor = 1.06 * std::pow(static_cast<double>(points.size()), -0.2);
  std::vector<double> bw(d);
  std::vector<double> column(points.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < points.size(); ++i) column[i] = points[i][j];
    bw[j] = std::max(factor * stats::population_std(column), kMinBandwidth);
  }
  return bw;
}

double tpe_score(std::span<const double> candidate, std::span<const UnitPoint> good,
                 std::span<const UnitPoint> bad, const TpeBandwidths& bandwidths) {
  if (good.empty()) throw SearcherError("tpe_score: good set is empty");
  const double l = kde_density(candidate, good, bandwidths.good);
  const double g = bad.empty() ? 1.0 : std::max(kde_density(candidate, bad, bandwidths.bad),
                                                kDensityFloor);
  return l / g;
}

namespace detail {

HpVector tpe_suggest(const History& history, const SearchSpace& space,
                     const SearcherConfig& config, Rng& rng) {
  if (history.empty()) return sample_uniform(space, rng);

  const auto split = tpe_split(history, config.gamma);
  const auto good = unit_points(space, split.good);
  const auto bad = unit_points(space, split.bad);
  const TpeBandwidths bw{kde_bandwidths(good), kde_bandwidths(bad)};

  const std::size_t pool = config.pool.value_or(kTpeDefaultPool);
  UnitPoint best;
  double best_score = -1.0;
  UnitPoint candidate(space.size());
  for (std::size_t c = 0; c < pool; ++c) {
    const auto& centre = good[rng.index(good.size())];
    for (std::size_t j = 0; j < space.size(); ++j) {
      candidate[j] = std::clamp(centre[j] + bw.good[j] * rng.normal(), 0.0, 1.0);
    }
    const double score = tpe_score(candidate, good, bad, bw);
    if (score > best_score) {
      best_score = score;
      best = candidate;
    }
  }
  return from_unit_clipped(space, best);
}

}  // namespace detail

}  // namespace gpbt
