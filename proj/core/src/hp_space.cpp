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

#include "gpbt/hp_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace gpbt {

namespace {

double forward(const Dimension& d, double x) {
  switch (d.scale) {
    case Scale::linear:
      return x;
    case Scale::log:
      return std::log10(x);
    case Scale::reverse_log:
      return std::log10(1.0 - x);
  }
  return x;
}

double inverse(const Dimension& d, double t) {
  switch (d.scale) {
    case Scale::linear:
      return t;
    case Scale::log:
      return std::pow(10.0, t);
    case Scale::reverse_log:
      return 1.0 - std::pow(10.0, t);
  }
  return t;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_dimension(const Dimension& d) {
  if (d.name.empty()) throw HpSpaceError("dimension name must not be empty");
  if (!std::isfinite(d.lower) || !std::isfinite(d.upper)) {
    throw HpSpaceError("dimension '" + d.name + "': bounds must be finite");
  }
  if (!(d.lower < d.upper)) {
    throw HpSpaceError("dimension '" + d.name + "': lower must be < upper");
  }
  if (d.scale == Scale::log && !(d.lower > 0.0)) {
    throw HpSpaceError("dimension '" + d.name + "': log scale requires lower > 0");
  }
  if (d.scale == Scale::reverse_log && !(d.upper < 1.0)) {
    throw HpSpaceError("dimension '" + d.name + "': reverse-log scale requires upper < 1");
  }
}

}  // namespace

std::string_view to_string(Scale scale) noexcept {
  switch (scale) {
    case Scale::linear:
      return "linear";
    case Scale::log:
      return "log";
    case Scale::reverse_log:
      return "reverse-log";
  }
  return "linear";
}

std::optional<Scale> parse_scale(std::string_view text) noexcept {
  if (text == "linear") return Scale::linear;
  if (text == "log") return Scale::log;
  if (text == "reverse-log" || text == "reverse_log") return Scale::reverse_log;
  return std::nullopt;
}

SearchSpace::SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw HpSpaceError("search space must have at least one dimension");
  std::set<std::string, std::less<>> names;
  for (const auto& d : dims_) {
    check_dimension(d);
    if (!names.insert(d.name).second) {
      throw HpSpaceError("duplicate dimension name '" + d.name + "'");
    }
  }
}

std::optional<std::size_t> SearchSpace::index_of(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<Violation> validate(const SearchSpace& space, const HpVector& hp) {
  if (hp.size() != space.size()) {
    return Violation{Violation::Kind::arity, {},
                     "expected " + std::to_string(space.size()) + " values, got " +
                         std::to_string(hp.size())};
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& d = space[i];
    const double x = hp[i];
    if (!std::isfinite(x)) {
      return Violation{Violation::Kind::not_finite, d.name, "'" + d.name + "' is not finite"};
    }
    if (x < d.lower || x > d.upper) {
      return Violation{Violation::Kind::out_of_range, d.name,
                       "'" + d.name + "' = " + fmt(x) + " outside [" + fmt(d.lower) + ", " +
                           fmt(d.upper) + "]"};
    }
  }
  return std::nullopt;
}

UnitPoint to_unit(const SearchSpace& space, const HpVector& hp) {
  if (auto v = validate(space, hp)) throw HpSpaceError(v->message);
  UnitPoint u(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& d = space[i];
    if (hp[i] == d.lower) {
      u[i] = 0.0;
    } else if (hp[i] == d.upper) {
      u[i] = 1.0;
    } else {
      const double lo = forward(d, d.lower);
      const double hi = forward(d, d.upper);
      u[i] = std::clamp((forward(d, hp[i]) - lo) / (hi - lo), 0.0, 1.0);
    }
  }
  return u;
}

HpVector from_unit(const SearchSpace& space, std::span<const double> u) {
  if (u.size() != space.size()) {
    throw HpSpaceError("unit point has " + std::to_string(u.size()) + " coordinates, space has " +
                       std::to_string(space.size()));
  }
  HpVector hp;
  hp.values.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& d = space[i];
    if (!(u[i] >= 0.0 && u[i] <= 1.0)) {
      throw HpSpaceError("unit coordinate for '" + d.name + "' = " + fmt(u[i]) +
                         " outside [0, 1]");
    }
    if (u[i] == 0.0) {
      hp[i] = d.lower;
    } else if (u[i] == 1.0) {
      hp[i] = d.upper;
    } else {
      const double lo = forward(d, d.lower);
      const double hi = forward(d, d.upper);
      hp[i] = std::clamp(inverse(d, lo + u[i] * (hi - lo)), d.lower, d.upper);
    }
  }
  return hp;
}

HpVector from_unit_clipped(const SearchSpace& space, std::span<const double> u) {
  UnitPoint clipped(u.begin(), u.end());
  for (auto& x : clipped) x = std::isfinite(x) ? std::clamp(x, 0.0, 1.0) : 0.5;
  return from_unit(space, clipped);
}

HpVector sample_uniform(const SearchSpace& space, Rng& rng) {
  UnitPoint u(space.size());
  for (auto& x : u) x = rng.uniform();
  return from_unit(space, u);
}

}  // namespace gpbt
