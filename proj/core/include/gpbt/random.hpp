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
#include <cstdint>
#include <random>

namespace gpbt {

/// Mixes a base seed with a stream tag into an independent 64-bit seed.
/// Used to give every consumer (searcher, selection, trainer forks) its own
/// reproducible stream derived from the single run seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) noexcept;

/// Seedable random source shared by searchers and the orchestrator.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  bool bernoulli(double p);

  engine_type& engine() noexcept { return engine_; }

 private:
  engine_type engine_;
};

}  // namespace gpbt
