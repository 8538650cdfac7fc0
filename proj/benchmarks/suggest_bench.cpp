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

#include <benchmark/benchmark.h>

#include "gpbt/searchers.hpp"

namespace {

using namespace gpbt;

const SearchSpace kSpace({Dimension{"lr", 1e-4, 1.0, Scale::log},
                          Dimension{"dropout", 0.0, 1.0, Scale::linear},
                          Dimension{"wd", 1e-5, 0.1, Scale::log}});

History quadratic_history(std::size_t size) {
  Rng rng(7);
  History h;
  for (std::size_t i = 0; i < size; ++i) {
    HpVector hp = sample_uniform(kSpace, rng);
    const auto u = to_unit(kSpace, hp);
    double loss = 0.0;
    for (double x : u) loss += (x - 0.3) * (x - 0.3);
    h.add(std::move(hp), loss);
  }
  return h;
}

void BM_Suggest(benchmark::State& state, SearcherKind kind) {
  const History h = quadratic_history(static_cast<std::size_t>(state.range(0)));
  SearcherConfig config;
  config.kind = kind;
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(suggest(config, kSpace, h, rng));
  state.SetLabel(std::string(to_string(kind)));
}

BENCHMARK_CAPTURE(BM_Suggest, random, SearcherKind::random)->Arg(16)->Arg(128);
BENCHMARK_CAPTURE(BM_Suggest, tpe, SearcherKind::tpe)->Arg(4)->Arg(16)->Arg(128);
BENCHMARK_CAPTURE(BM_Suggest, cma, SearcherKind::cma)->Arg(16)->Arg(128);
BENCHMARK_CAPTURE(BM_Suggest, gp_ucb, SearcherKind::gp_ucb)->Arg(4)->Arg(16)->Arg(64);

}  // namespace
