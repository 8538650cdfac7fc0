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

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "gpbt/searchers.hpp"
#include "gpbt/stats.hpp"
#include "searchers/internal.hpp"

namespace gpbt {

namespace {

constexpr double kJitter = 1e-6;
constexpr double kNoiseVariance = 1e-4;  // relative to the standardized loss variance
constexpr double kLengthscales[] = {0.05, 0.1, 0.2, 0.4, 0.8};

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::vector<unsigned> first_primes(std::size_t count) {
  std::vector<unsigned> primes;
  for (unsigned c = 2; primes.size() < count; ++c) {
    bool prime = true;
    for (unsigned p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

double radical_inverse(std::size_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

}  // namespace

double gp_ucb_beta(std::size_t dims, std::size_t t, double delta) {
  const double d = static_cast<double>(dims);
  const double tt = static_cast<double>(t);
  return 2.0 * std::log(d * tt * tt * std::numbers::pi * std::numbers::pi / (6.0 * delta));
}

std::optional<GpModel> GpModel::fit(std::span<const UnitPoint> inputs,
                                    std::span<const double> targets, double lengthscale,
                                    double noise_variance) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd k(n, n);
  const double inv_two_l2 = 1.0 / (2.0 * lengthscale * lengthscale);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = std::exp(-squared_distance(inputs[i], inputs[j]) * inv_two_l2);
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += noise_variance;
  }

  GpModel model;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    k.diagonal().array() += kJitter;
    llt.compute(k);
    if (llt.info() != Eigen::Success) return std::nullopt;
    model.used_jitter_ = true;
  }

  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd lower = llt.matrixL();

  model.inputs_.assign(inputs.begin(), inputs.end());
  model.alpha_.assign(alpha.data(), alpha.data() + n);
  model.chol_.resize(static_cast<std::size_t>(n * n));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      model.chol_.data(), n, n) = lower;
  model.lengthscale_ = lengthscale;
  model.log_ml_ = -0.5 * y.dot(alpha) - lower.diagonal().array().log().sum() -
                  0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return model;
}

GpModel::Prediction GpModel::predict(std::span<const double> x) const {
  const auto n = static_cast<Eigen::Index>(inputs_.size());
  const double inv_two_l2 = 1.0 / (2.0 * lengthscale_ * lengthscale_);
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kstar(i) = std::exp(-squared_distance(inputs_[i], x) * inv_two_l2);
  }
  const Eigen::Map<const Eigen::VectorXd> alpha(alpha_.data(), n);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      lower(chol_.data(), n, n);
  const Eigen::VectorXd v = lower.triangularView<Eigen::Lower>().solve(kstar);
  const double var = std::max(1.0 - v.squaredNorm(), 0.0);
  return {kstar.dot(alpha), std::sqrt(var)};
}

std::vector<UnitPoint> halton_points(std::size_t count, std::size_t dims,
                                     std::span<const double> shift) {
  const auto primes = first_primes(dims);
  std::vector<UnitPoint> points(count, UnitPoint(dims));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < dims; ++j) {
      double v = radical_inverse(i + 1, primes[j]);
      if (j < shift.size()) v = std::fmod(v + shift[j], 1.0);
      points[i][j] = v;
    }
  }
  return points;
}

HpVector gp_ucb_suggest(const History& history, const SearchSpace& space,
                        const SearcherConfig& config, Rng& rng) {
  detail::check_history(space, history);
  if (history.empty()) return sample_uniform(space, rng);

  const auto inputs = detail::unit_points(space, history);
  std::vector<double> y(history.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = history.observations[i].loss;
  const double mu = stats::mean(y);
  double sd = stats::population_std(y);
  if (!(sd > 0.0)) sd = 1.0;
  for (auto& v : y) v = (v - mu) / sd;

  std::optional<GpModel> model;
  for (double ell : kLengthscales) {
    auto candidate = GpModel::fit(inputs, y, ell, kNoiseVariance);
    if (candidate && (!model || candidate->log_marginal_likelihood() >
                                    model->log_marginal_likelihood())) {
      model = std::move(candidate);
    }
  }

  std::vector<double> shift(space.size());
  for (auto& s : shift) s = rng.uniform();
  if (!model) return sample_uniform(space, rng);

  auto pool = halton_points(config.pool.value_or(kGpDefaultPool), space.size(), shift);
  const auto incumbent = std::min_element(
      history.observations.begin(), history.observations.end(),
      [](const Observation& a, const Observation& b) { return a.loss < b.loss; });
  pool.push_back(to_unit(space, incumbent->hp));

  const double root_beta =
      std::sqrt(std::max(gp_ucb_beta(space.size(), history.size() + 1, config.beta_delta), 0.0));
  const UnitPoint* best = nullptr;
  double best_bound = 0.0;
  for (const auto& x : pool) {
    const auto p = model->predict(x);
    const double bound = p.mean - root_beta * p.sd;
    if (!best || bound < best_bound) {
      best = &x;
      best_bound = bound;
    }
  }
  return from_unit_clipped(space, *best);
}

}  // namespace gpbt
