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
#include <string>

#include "gpbt/searchers.hpp"
#include "searchers/internal.hpp"

namespace gpbt {

std::string_view to_string(SearcherKind kind) noexcept {
  switch (kind) {
    case SearcherKind::random:
      return "random";
    case SearcherKind::tpe:
      return "tpe";
    case SearcherKind::cma:
      return "cma";
    case SearcherKind::gp_ucb:
      return "gp_ucb";
  }
  return "random";
}

std::optional<SearcherKind> parse_searcher_kind(std::string_view text) noexcept {
  if (text == "random" || text == "rs") return SearcherKind::random;
  if (text == "tpe") return SearcherKind::tpe;
  if (text == "cma" || text == "cma_lite") return SearcherKind::cma;
  if (text == "gp_ucb" || text == "gp-ucb" || text == "gp") return SearcherKind::gp_ucb;
  return std::nullopt;
}

void validate(const SearcherConfig& config) {
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) {
    throw SearcherError("searcher.gamma must be in (0, 1]");
  }
  if (config.pool && *config.pool == 0) throw SearcherError("searcher.pool must be >= 1");
  if (!(config.beta_delta > 0.0 && config.beta_delta < 1.0)) {
    throw SearcherError("searcher.beta_delta must be in (0, 1)");
  }
  if (config.window < 4) throw SearcherError("searcher.window must be >= 4");
}

namespace detail {

void check_history(const SearchSpace& space, const History& history) {
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& obs = history.observations[i];
    if (obs.hp.size() != space.size()) {
      throw SearcherError("history observation " + std::to_string(i) + " has " +
                          std::to_string(obs.hp.size()) + " values, space has " +
                          std::to_string(space.size()));
    }
    if (!std::isfinite(obs.loss)) {
      throw SearcherError("history observation " + std::to_string(i) + " has a non-finite loss");
    }
  }
}

std::vector<UnitPoint> unit_points(const SearchSpace& space, const History& history) {
  std::vector<UnitPoint> points;
  points.reserve(history.size());
  for (const auto& obs : history.observations) points.push_back(to_unit(space, obs.hp));
  return points;
}

}  // namespace detail

HpVector suggest(const SearcherConfig& config, const SearchSpace& space, const History& history,
                 Rng& rng) {
  detail::check_history(space, history);
  switch (config.kind) {
    case SearcherKind::random:
      return sample_uniform(space, rng);
    case SearcherKind::tpe:
      return detail::tpe_suggest(history, space, config, rng);
    case SearcherKind::cma: {
      const std::size_t take = std::min(config.window, history.size());
      std::span<const Observation> tail(history.observations);
      auto state = cma_update(space, tail.subspan(tail.size() - take));
      if (!state) return sample_uniform(space, rng);
      return cma_sample(space, *state, rng);
    }
    case SearcherKind::gp_ucb:
      return gp_ucb_suggest(history, space, config, rng);
  }
  return sample_uniform(space, rng);
}

}  // namespace gpbt
