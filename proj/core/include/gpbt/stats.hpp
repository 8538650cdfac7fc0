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

#include <span>

namespace gpbt::stats {

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_std(std::span<const double> xs);
/// Population standard deviation (n denominator); 0 for an empty span.
double population_std(std::span<const double> xs);
/// Median; the mean of the two middle values for even counts.
double median(std::span<const double> xs);
/// Linear-interpolation quantile (R type 7), q in [0, 1].
double quantile_linear(std::span<const double> xs, double q);
/// Inverse-CDF quantile (R type 1): the smallest value v with F(v) >= q.
double quantile_lower(std::span<const double> xs, double q);

}  // namespace gpbt::stats
