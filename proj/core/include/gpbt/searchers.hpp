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
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "gpbt/hp_space.hpp"
#include "gpbt/random.hpp"

namespace gpbt {

/// One evaluated configuration. Losses are always minimized.
struct Observation {
  HpVector hp;
  double loss = 0.0;
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Observations in evaluation order.
struct History {
  std::vector<Observation> observations;

  std::size_t size() const noexcept { return observations.size(); }
  bool empty() const noexcept { return observations.empty(); }
  void add(HpVector hp, double loss) { observations.push_back({std::move(hp), loss}); }
  friend bool operator==(const History&, const History&) = default;
};

enum class SearcherKind { random, tpe, cma, gp_ucb };

std::string_view to_string(SearcherKind kind) noexcept;
std::optional<SearcherKind> parse_searcher_kind(std::string_view text) noexcept;

struct SearcherConfig {
  SearcherKind kind = SearcherKind::tpe;
  /// TPE: fraction of the history treated as "good".
  double gamma = 0.25;
  /// TPE: candidates drawn from l(x); GP-UCB: quasi-random pool size.
  /// nullopt selects the per-kind default.
  std::optional<std::size_t> pool;
  /// GP-UCB confidence parameter delta in beta_t.
  double beta_delta = 0.1;
  /// CMA-lite: number of most recent observations the state is derived from.
  std::size_t window = 20;
};

inline constexpr std::size_t kTpeDefaultPool = 24;
inline constexpr std::size_t kGpDefaultPool = 256;

class SearcherError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws SearcherError when a parameter is outside its documented range.
void validate(const SearcherConfig& config);

/// The search function: proposes the next configuration given a history.
/// Deterministic in (config, space, history, rng state); the result always
/// validates against `space`.
HpVector suggest(const SearcherConfig& config, const SearchSpace& space, const History& history,
                 Rng& rng);

// ---------------------------------------------------------------------------
// TPE

struct TpeSplit {
  History good;
  History bad;
};

/// good = the ceil(gamma * |history|) lowest losses (ties go to the earlier
/// observation), bad = the rest, both in original order.
TpeSplit tpe_split(const History& history, double gamma);

/// Per-dimension Gaussian KDE bandwidth: max(1.06 * std * n^(-1/5), 0.05).
std::vector<double> kde_bandwidths(std::span<const UnitPoint> points);

struct TpeBandwidths {
  std::vector<double> good;
  std::vector<double> bad;
};

/// Density ratio l(x) / g(x) in unit space. g is floored at 1e-12 and is
/// the uniform density 1 when `bad` is empty.
double tpe_score(std::span<const double> candidate, std::span<const UnitPoint> good,
                 std::span<const UnitPoint> bad, const TpeBandwidths& bandwidths);

// ---------------------------------------------------------------------------
// CMA-lite (diagonal Gaussian)

struct CmaState {
  UnitPoint mean;
  std::vector<double> sigma;
};

inline constexpr double kCmaSigmaMin = 0.01;
inline constexpr double kCmaSigmaMax = 0.5;
/// Smallest elite; also the smallest window that leaves the uniform fallback.
inline constexpr std::size_t kCmaMinElite = 4;

/// Derives the sampling distribution from a window of observations: the mean
/// is the rank-weighted average of the top quartile (best heaviest, at least
/// kCmaMinElite points), sigma their per-dimension std clamped to [0.01, 0.5].
/// nullopt for fewer than 4 observations.
std::optional<CmaState> cma_update(const SearchSpace& space, std::span<const Observation> tail);
HpVector cma_sample(const SearchSpace& space, const CmaState& state, Rng& rng);

// ---------------------------------------------------------------------------
// GP-UCB

/// beta_t = 2 log(d t^2 pi^2 / (6 delta)).
double gp_ucb_beta(std::size_t dims, std::size_t t, double delta);

/// Gaussian-process regression on unit-space inputs with a squared-exponential
/// kernel over standardized targets.
class GpModel {
 public:
  struct Prediction {
    double mean;
    double sd;
  };

  /// Returns nullopt when the kernel matrix stays singular after one jitter retry.
  static std::optional<GpModel> fit(std::span<const UnitPoint> inputs,
                                    std::span<const double> targets, double lengthscale,
                                    double noise_variance);

  Prediction predict(std::span<const double> x) const;
  double log_marginal_likelihood() const noexcept { return log_ml_; }
  bool used_jitter() const noexcept { return used_jitter_; }
  double lengthscale() const noexcept { return lengthscale_; }

 private:
  GpModel() = default;

  std::vector<UnitPoint> inputs_;
  std::vector<double> alpha_;
  std::vector<double> chol_;  // row-major lower factor
  double lengthscale_ = 0.2;
  double log_ml_ = 0.0;
  bool used_jitter_ = false;
};

/// Scrambled (randomly shifted) Halton points in [0,1)^dims.
std::vector<UnitPoint> halton_points(std::size_t count, std::size_t dims,
                                     std::span<const double> shift);

HpVector gp_ucb_suggest(const History& history, const SearchSpace& space,
                        const SearcherConfig& config, Rng& rng);

}  // namespace gpbt
