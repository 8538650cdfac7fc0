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
#include <sstream>

#include "gpbt/random.hpp"
#include "gpbt/trainers.hpp"
#include "json.hpp"

namespace gpbt {

namespace {

constexpr double kLossCap = 1e12;
constexpr double kWeightCap = 1e150;
constexpr std::uint64_t kInitStreamTag = 0x1217;
constexpr std::uint64_t kLatentTag = 0x1a7e;

double capped(double loss) { return std::isfinite(loss) ? std::min(loss, kLossCap) : kLossCap; }

}  // namespace

std::string_view to_string(TrainerKind kind) noexcept {
  switch (kind) {
    case TrainerKind::noisy_quadratic:
      return "noisy_quadratic";
    case TrainerKind::phase_surrogate:
      return "phase_surrogate";
    case TrainerKind::weight_sensitive:
      return "weight_sensitive";
    case TrainerKind::external:
      return "external";
  }
  return "noisy_quadratic";
}

std::optional<TrainerKind> parse_trainer_kind(std::string_view text) noexcept {
  if (text == "noisy_quadratic") return TrainerKind::noisy_quadratic;
  if (text == "phase_surrogate") return TrainerKind::phase_surrogate;
  if (text == "weight_sensitive") return TrainerKind::weight_sensitive;
  if (text == "external") return TrainerKind::external;
  return std::nullopt;
}

std::vector<double> default_curvatures(std::size_t dimension) {
  std::vector<double> h(dimension, 1.0);
  for (std::size_t i = 0; i < dimension && dimension > 1; ++i) {
    h[i] = std::pow(4.0, static_cast<double>(i) / static_cast<double>(dimension - 1));
  }
  return h;
}

void validate(const TrainerSpec& spec) {
  if (spec.kind == TrainerKind::external) {
    if (spec.command.empty()) throw TrainerError("trainer.command is required for external trainers");
    if (!(spec.timeout_seconds > 0.0)) throw TrainerError("trainer.timeout_seconds must be > 0");
    return;
  }
  if (spec.dimension == 0) throw TrainerError("trainer.dimension must be >= 1");
  if (!spec.curvatures.empty() && spec.curvatures.size() != spec.dimension) {
    throw TrainerError("trainer.curvatures must have `dimension` entries");
  }
  for (double h : spec.curvatures) {
    if (!(h > 0.0) || !std::isfinite(h)) throw TrainerError("trainer.curvatures must be positive");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
    throw TrainerError("trainer.noise must be >= 0");
  }
  if (!(spec.test_gap >= 0.0)) throw TrainerError("trainer.test_gap must be >= 0");
  if (spec.rate_max && !(*spec.rate_max > 0.0)) throw TrainerError("trainer.rate_max must be > 0");
}

std::unique_ptr<Trainer> make_trainer(const TrainerSpec& spec, const SearchSpace& space) {
  validate(spec);
  if (spec.kind == TrainerKind::external) {
    return std::make_unique<ExternalTrainer>(
        spec.command, spec.args, space,
        std::chrono::milliseconds(static_cast<long long>(spec.timeout_seconds * 1000.0)));
  }
  return std::make_unique<SyntheticTrainer>(spec, space);
}

std::string serialize(const TrainerState& state) {
  nlohmann::ordered_json j;
  j["weights"] = state.weights;
  j["latent"] = state.latent;
  j["steps"] = state.steps;
  j["stream"] = state.stream;
  j["token"] = state.token;
  return j.dump();
}

TrainerState deserialize_state(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TrainerState s;
    s.weights = j.at("weights").get<std::vector<double>>();
    s.latent = j.at("latent").get<int>();
    s.steps = j.at("steps").get<std::uint64_t>();
    s.stream = j.at("stream").get<std::uint64_t>();
    s.token = j.at("token").get<std::string>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw TrainerError(std::string("malformed trainer state: ") + e.what());
  }
}

double expected_quadratic_loss(std::span<const double> curvatures, double noise,
                               std::span<const double> initial_second_moments,
                               std::span<const Segment> segments) {
  std::vector<double> m(initial_second_moments.begin(), initial_second_moments.end());
  const double s2 = noise * noise;
  for (const auto& seg : segments) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double a = 1.0 - seg.rate * curvatures[i];
      for (std::size_t k = 0; k < seg.iterations; ++k) m[i] = a * a * m[i] + seg.rate * seg.rate * s2;
    }
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) loss += curvatures[i] * m[i];
  return capped(loss);
}

SyntheticTrainer::SyntheticTrainer(const TrainerSpec& spec, const SearchSpace& space)
    : kind_(spec.kind),
      curvatures_(spec.curvatures.empty() ? default_curvatures(spec.dimension) : spec.curvatures),
      noise_(spec.noise),
      test_gap_(spec.test_gap),
      test_seed_(spec.seed),
      rate_max_(1.0),
      rate_index_(space.index_of("lr")) {
  validate(spec);
  if (kind_ == TrainerKind::external) {
    throw TrainerError("SyntheticTrainer cannot run an external trainer spec");
  }
  if (spec.rate_max) {
    rate_max_ = *spec.rate_max;
  } else if (rate_index_) {
    rate_max_ = space[*rate_index_].upper;
  }
}

double SyntheticTrainer::rate_of(const HpVector& hp) const {
  return rate_index_ && *rate_index_ < hp.size() ? hp[*rate_index_] : 0.0;
}

double SyntheticTrainer::effective_rate(double rate, int latent) const noexcept {
  if (kind_ == TrainerKind::weight_sensitive && latent < 0) return rate_max_ - rate;
  return rate;
}

TrainerState SyntheticTrainer::init(std::uint64_t seed) {
  TrainerState s;
  s.stream = derive_seed(seed, kInitStreamTag);
  Rng rng(seed);
  s.weights.resize(curvatures_.size());
  for (auto& w : s.weights) w = rng.normal();
  if (kind_ == TrainerKind::phase_surrogate) {
    for (auto& w : s.weights) w = w * w;
  }
  return s;
}

void SyntheticTrainer::step(TrainerState& s, const HpVector& hp, std::size_t iterations) {
  if (s.weights.size() != curvatures_.size()) throw TrainerError("state/trainer dimension mismatch");
  if (kind_ == TrainerKind::weight_sensitive && s.latent == 0) {
    s.latent = (derive_seed(s.stream, kLatentTag) & 1u) ? 1 : -1;
  }
  const double r = effective_rate(rate_of(hp), s.latent);
  const double s2 = noise_ * noise_;
  for (std::size_t k = 0; k < iterations; ++k) {
    if (kind_ == TrainerKind::phase_surrogate) {
      for (std::size_t i = 0; i < s.weights.size(); ++i) {
        const double a = 1.0 - r * curvatures_[i];
        s.weights[i] = std::min(a * a * s.weights[i] + r * r * s2, kWeightCap);
      }
    } else {
      Rng noise(derive_seed(s.stream, s.steps));
      for (std::size_t i = 0; i < s.weights.size(); ++i) {
        const double xi = noise_ > 0.0 ? noise.normal() : 0.0;
        const double w = (1.0 - r * curvatures_[i]) * s.weights[i] + r * noise_ * xi;
        s.weights[i] = std::clamp(w, -kWeightCap, kWeightCap);
      }
    }
    ++s.steps;
  }
}

Evaluation SyntheticTrainer::evaluate(const TrainerState& s) {
  double loss = 0.0;
  for (std::size_t i = 0; i < s.weights.size(); ++i) {
    const double w = s.weights[i];
    loss += curvatures_[i] * (kind_ == TrainerKind::phase_surrogate ? w : w * w);
  }
  const double val = capped(loss);
  double test = val;
  if (test_gap_ > 0.0) {
    Rng gap(derive_seed(test_seed_, s.steps));
    test = capped(val * std::exp(test_gap_ * gap.normal()));
  }
  return {val, test};
}

TrainerState SyntheticTrainer::fork(const TrainerState& s, std::uint64_t salt) {
  // The noise stream is shared with the original: every copy sees the same
  // gradient noise at a given step, like a fixed data order.
  TrainerState copy = s;
  if (kind_ == TrainerKind::weight_sensitive && copy.latent == 0) {
    copy.latent = (derive_seed(derive_seed(s.stream, salt), kLatentTag) & 1u) ? 1 : -1;
  }
  return copy;
}

double SyntheticTrainer::expected_loss(const TrainerState& start,
                                       std::span<const Segment> segments) const {
  std::vector<double> m(start.weights);
  if (kind_ != TrainerKind::phase_surrogate) {
    for (auto& w : m) w = w * w;
  }
  const int latent = start.latent == 0 ? 1 : start.latent;
  std::vector<Segment> effective(segments.begin(), segments.end());
  for (auto& seg : effective) seg.rate = effective_rate(seg.rate, latent);
  return expected_quadratic_loss(curvatures_, noise_, m, effective);
}

}  // namespace gpbt
