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

#include <gtest/gtest.h>

#include <cmath>

#include "gpbt/hp_space.hpp"

namespace gpbt {
namespace {

SearchSpace one_dim(double lo, double hi, Scale scale, const char* name = "x") {
  return SearchSpace({Dimension{name, lo, hi, scale}});
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

TEST(SearchSpaceTest, RejectsInvalidDeclarations) {
  EXPECT_THROW(SearchSpace({}), HpSpaceError);
  EXPECT_THROW(one_dim(1.0, 1.0, Scale::linear), HpSpaceError);
  EXPECT_THROW(one_dim(2.0, 1.0, Scale::linear), HpSpaceError);
  EXPECT_THROW(one_dim(0.0, 1.0, Scale::log), HpSpaceError);
  EXPECT_THROW(one_dim(0.5, 1.0, Scale::reverse_log), HpSpaceError);
  EXPECT_THROW(SearchSpace({Dimension{"a", 0, 1, Scale::linear}, Dimension{"a", 0, 2, Scale::linear}}),
               HpSpaceError);
}

TEST(SearchSpaceTest, IndexOfFindsNames) {
  SearchSpace space({Dimension{"lr", 1e-4, 1, Scale::log}, Dimension{"dropout", 0, 1, Scale::linear}});
  EXPECT_EQ(space.index_of("dropout"), 1u);
  EXPECT_FALSE(space.index_of("momentum").has_value());
}

TEST(ScaleTest, ParsesBothReverseLogSpellings) {
  EXPECT_EQ(parse_scale("reverse-log"), Scale::reverse_log);
  EXPECT_EQ(parse_scale("reverse_log"), Scale::reverse_log);
  EXPECT_EQ(parse_scale("log"), Scale::log);
  EXPECT_FALSE(parse_scale("cubic").has_value());
  EXPECT_EQ(to_string(Scale::reverse_log), "reverse-log");
}

TEST(ToUnitTest, LinearIdentityOnUnitInterval) {
  EXPECT_DOUBLE_EQ(to_unit(one_dim(0, 1, Scale::linear), HpVector{{0.25}})[0], 0.25);
}

TEST(ToUnitTest, LogMidpoint) {
  EXPECT_NEAR(to_unit(one_dim(1e-5, 1e-1, Scale::log), HpVector{{1e-3}})[0], 0.5, 1e-12);
}

TEST(ToUnitTest, ReverseLogLowerEndpointMapsToZero) {
  const auto space = one_dim(1 - 1e-1, 1 - 1e-4, Scale::reverse_log);
  EXPECT_DOUBLE_EQ(to_unit(space, HpVector{{0.9}})[0], 0.0);
}

TEST(ToUnitTest, RejectsArityAndRange) {
  const auto space = one_dim(0, 1, Scale::linear);
  EXPECT_THROW(to_unit(space, HpVector{{0.1, 0.2}}), HpSpaceError);
  EXPECT_THROW(to_unit(space, HpVector{{1.5}}), HpSpaceError);
}

TEST(FromUnitTest, Endpoints) {
  EXPECT_DOUBLE_EQ(from_unit(one_dim(1e-5, 1e-1, Scale::log), std::vector<double>{1.0})[0], 1e-1);
  EXPECT_NEAR(from_unit(one_dim(1 - 1e-1, 1 - 1e-4, Scale::reverse_log), std::vector<double>{1.0})[0],
              0.9999, 1e-15);
}

TEST(FromUnitTest, RejectsCoordinatesOutsideCube) {
  const auto space = one_dim(0, 1, Scale::linear);
  EXPECT_THROW(from_unit(space, std::vector<double>{1.01}), HpSpaceError);
  EXPECT_THROW(from_unit(space, std::vector<double>{-0.01}), HpSpaceError);
  EXPECT_THROW(from_unit(space, std::vector<double>{NAN}), HpSpaceError);
}

TEST(FromUnitTest, ClippedVariantClampsInsteadOfThrowing) {
  const auto space = one_dim(2, 4, Scale::linear);
  EXPECT_DOUBLE_EQ(from_unit_clipped(space, std::vector<double>{1.7})[0], 4.0);
  EXPECT_DOUBLE_EQ(from_unit_clipped(space, std::vector<double>{-3.0})[0], 2.0);
}

TEST(RoundTripTest, ThousandRandomVectorsWithinRelativeTolerance) {
  SearchSpace space({Dimension{"lin", -3, 7, Scale::linear}, Dimension{"lg", 1e-5, 1e-1, Scale::log},
                     Dimension{"rl", 1 - 1e-1, 1 - 1e-4, Scale::reverse_log},
                     Dimension{"eps", 1e-20, 1e-6, Scale::linear}});
  Rng rng(11);
  for (int k = 0; k < 1000; ++k) {
    const HpVector hp = sample_uniform(space, rng);
    const HpVector back = from_unit(space, to_unit(space, hp));
    for (std::size_t i = 0; i < space.size(); ++i) {
      ASSERT_LE(rel_err(back[i], hp[i]), 1e-12) << space[i].name << " " << hp[i];
    }
  }
}

TEST(MonotonicityTest, ToUnitIncreasesWithValueOnEveryScale) {
  for (const auto& space : {one_dim(0, 10, Scale::linear), one_dim(1e-6, 1, Scale::log),
                            one_dim(0.9, 0.9999, Scale::reverse_log)}) {
    double prev = -1.0;
    for (int k = 0; k <= 200; ++k) {
      const double x = space[0].lower + (space[0].upper - space[0].lower) * k / 200.0;
      const double u = to_unit(space, HpVector{{x}})[0];
      ASSERT_GT(u, prev) << to_string(space[0].scale) << " at " << x;
      prev = u;
    }
  }
}

TEST(SampleUniformTest, LinearMean) {
  const auto space = one_dim(0, 10, Scale::linear);
  Rng rng(1);
  double sum = 0;
  for (int k = 0; k < 100000; ++k) sum += sample_uniform(space, rng)[0];
  EXPECT_NEAR(sum / 1e5, 5.0, 0.1);
}

TEST(SampleUniformTest, LogUniformMeanOfExponent) {
  const auto space = one_dim(1e-5, 1e-1, Scale::log);
  Rng rng(2);
  double sum = 0;
  for (int k = 0; k < 100000; ++k) sum += std::log10(sample_uniform(space, rng)[0]);
  EXPECT_NEAR(sum / 1e5, -3.0, 0.05);
}

TEST(SampleUniformTest, SeededAndAlwaysValid) {
  SearchSpace space({Dimension{"a", 1e-3, 1, Scale::log}, Dimension{"b", 0.9, 0.999, Scale::reverse_log}});
  Rng r1(5), r2(5);
  for (int k = 0; k < 1000; ++k) {
    const HpVector a = sample_uniform(space, r1);
    ASSERT_EQ(a, sample_uniform(space, r2));
    ASSERT_FALSE(validate(space, a).has_value());
  }
}

TEST(ValidateTest, ReportsFirstViolation) {
  SearchSpace space({Dimension{"lr", 1e-4, 1, Scale::log}, Dimension{"wd", 0, 0.1, Scale::linear}});
  EXPECT_FALSE(validate(space, HpVector{{0.01, 0.05}}).has_value());

  const auto low = validate(space, HpVector{{1e-5, 0.5}});
  ASSERT_TRUE(low.has_value());
  EXPECT_EQ(low->kind, Violation::Kind::out_of_range);
  EXPECT_EQ(low->dimension, "lr");

  const auto arity = validate(space, HpVector{{0.01}});
  ASSERT_TRUE(arity.has_value());
  EXPECT_EQ(arity->kind, Violation::Kind::arity);

  const auto nan = validate(space, HpVector{{0.01, NAN}});
  ASSERT_TRUE(nan.has_value());
  EXPECT_EQ(nan->kind, Violation::Kind::not_finite);
  EXPECT_EQ(nan->dimension, "wd");
}

}  // namespace
}  // namespace gpbt
