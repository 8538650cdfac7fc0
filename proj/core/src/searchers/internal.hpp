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

#include <vector>

#include "gpbt/searchers.hpp"

namespace gpbt::detail {

void check_history(const SearchSpace& space, const History& history);
std::vector<UnitPoint> unit_points(const SearchSpace& space, const History& history);
HpVector tpe_suggest(const History& history, const SearchSpace& space,
                     const SearcherConfig& config, Rng& rng);

}  // namespace gpbt::detail
