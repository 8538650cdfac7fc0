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
#include <string>
#include <string_view>
#include <vector>

#include "gpbt/random.hpp"

namespace gpbt {

/// How a dimension maps onto the unit interval.
///  - linear:      u is affine in x
///  - log:         u is affine in log10(x), requires lower > 0
///  - reverse_log: u is affine in log10(1 - x), requires upper < 1; meant for
///                 momentum-style ranges like [1 - 1e-1, 1 - 1e-4]
enum class Scale { linear, log, reverse_log };

std::string_view to_string(Scale scale) noexcept;
std::optional<Scale> parse_scale(std::string_view text) noexcept;

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  Scale scale = Scale::linear;
};

class HpSpaceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Hyperparameter values in native units, one per dimension of a SearchSpace.
struct HpVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  friend bool operator==(const HpVector&, const HpVector&) = default;
};

/// A point of the unit cube [0,1]^d; the coordinate system every searcher works in.
using UnitPoint = std::vector<double>;

struct Violation {
  enum class Kind { arity, out_of_range, not_finite };
  Kind kind;
  std::string dimension;  // empty for arity violations
  std::string message;
};

class SearchSpace {
 public:
  /// Throws HpSpaceError on an empty list, duplicate names, or invalid bounds.
  explicit SearchSpace(std::vector<Dimension> dims);

  std::size_t size() const noexcept { return dims_.size(); }
  const std::vector<Dimension>& dims() const noexcept { return dims_; }
  const Dimension& operator[](std::size_t i) const { return dims_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const noexcept;

 private:
  std::vector<Dimension> dims_;
};

UnitPoint to_unit(const SearchSpace& space, const HpVector& hp);
/// Inverse of to_unit. Endpoints map exactly: u=0 -> lower, u=1 -> upper.
HpVector from_unit(const SearchSpace& space, std::span<const double> u);
/// Clips each coordinate into [0,1] then maps back; used on raw searcher proposals.
HpVector from_unit_clipped(const SearchSpace& space, std::span<const double> u);
HpVector sample_uniform(const SearchSpace& space, Rng& rng);
/// Reports the first violated constraint, or nullopt when hp is valid.
std::optional<Violation> validate(const SearchSpace& space, const HpVector& hp);

}  // namespace gpbt
