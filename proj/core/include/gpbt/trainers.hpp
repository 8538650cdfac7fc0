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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gpbt/hp_space.hpp"

namespace gpbt {

/// Model state advanced by a trainer. Synthetic trainers keep their
/// parameters in `weights`; the external bridge keeps only the handle the
/// worker process returned in `token`.
struct TrainerState {
  std::vector<double> weights;
  int latent = 0;  // weight_sensitive response regime (+1/-1), 0 until drawn
  std::uint64_t steps = 0;
  std::uint64_t stream = 0;  // gradient-noise stream
  std::string token;
  friend bool operator==(const TrainerState&, const TrainerState&) = default;
};

std::string serialize(const TrainerState& state);
TrainerState deserialize_state(std::string_view text);

struct Evaluation {
  double val_loss = 0.0;
  double test_loss = 0.0;
  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

class TrainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unexpected message from an external trainer.
class ProtocolError : public TrainerError {
 public:
  using TrainerError::TrainerError;
};

/// The training function. A state is used by one task at a time; distinct
/// states may be stepped concurrently.
class Trainer {
 public:
  virtual ~Trainer() = default;

  virtual TrainerState init(std::uint64_t seed) = 0;
  /// Runs `iterations` learning iterations under `hp`.
  virtual void step(TrainerState& state, const HpVector& hp, std::size_t iterations) = 0;
  /// Never mutates the state.
  virtual Evaluation evaluate(const TrainerState& state) = 0;
  /// Weight transfer: an independent copy. `salt` identifies the copy; the
  /// synthetic trainers use it only to draw a weight_sensitive latent.
  virtual TrainerState fork(const TrainerState& state, std::uint64_t salt) = 0;
};

enum class TrainerKind { noisy_quadratic, phase_surrogate, weight_sensitive, external };

std::string_view to_string(TrainerKind kind) noexcept;
std::optional<TrainerKind> parse_trainer_kind(std::string_view text) noexcept;

struct TrainerSpec {
  TrainerKind kind = TrainerKind::noisy_quadratic;
  std::size_t dimension = 4;
  /// Per-coordinate curvatures h_i; empty selects default_curvatures(dimension).
  std::vector<double> curvatures;
  /// Gradient-noise scale sigma.
  double noise = 0.5;
  /// Relative size of the val/test perturbation.
  double test_gap = 0.05;
  std::uint64_t seed = 0;
  /// weight_sensitive: r_max in r_eff = r_max - r; defaults to the "lr" upper bound.
  std::optional<double> rate_max;
  // external
  std::string command;
  std::vector<std::string> args;
  double timeout_seconds = 300.0;
};

/// Evenly log-spaced curvatures in [1, 4].
std::vector<double> default_curvatures(std::size_t dimension);

/// Throws TrainerError when a kind-specific parameter is invalid.
void validate(const TrainerSpec& spec);

std::unique_ptr<Trainer> make_trainer(const TrainerSpec& spec, const SearchSpace& space);

// ---------------------------------------------------------------------------
// Synthetic trainers

/// One constant-rate stretch of training.
struct Segment {
  double rate = 0.0;
  std::size_t iterations = 0;
};

/// Quadratic bowl L(theta) = sum_i h_i theta_i^2 trained by noisy gradient
/// descent: theta_i <- (1 - r h_i) theta_i + r sigma xi. The hyperparameter
/// named "lr" is the rate r; other dimensions are ignored.
///
///  - noisy_quadratic: samples theta.
///  - phase_surrogate: tracks E[theta_i^2] exactly, so losses are the
///    closed-form expected loss and evaluation is noise-free.
///  - weight_sensitive: noisy_quadratic whose lineage carries a latent b drawn
///    when the lineage is first forked (or first stepped, if never forked) and
///    inherited afterwards; b = -1 flips the response to r_eff = r_max - r.
///
/// Forks share the noise stream of their source, so copies trained with the
/// same rate stay identical.
class SyntheticTrainer final : public Trainer {
 public:
  SyntheticTrainer(const TrainerSpec& spec, const SearchSpace& space);

  TrainerState init(std::uint64_t seed) override;
  void step(TrainerState& state, const HpVector& hp, std::size_t iterations) override;
  Evaluation evaluate(const TrainerState& state) override;
  TrainerState fork(const TrainerState& state, std::uint64_t salt) override;

  TrainerKind kind() const noexcept { return kind_; }
  const std::vector<double>& curvatures() const noexcept { return curvatures_; }
  double noise() const noexcept { return noise_; }
  double rate_max() const noexcept { return rate_max_; }
  /// The learning rate `hp` encodes (0 when the space has no "lr").
  double rate_of(const HpVector& hp) const;
  /// Rate after the latent response flip.
  double effective_rate(double rate, int latent) const noexcept;

  /// Expected loss after running `segments` from `start`'s parameters, with
  /// the latent of `start` (treated as +1 when unset).
  double expected_loss(const TrainerState& start, std::span<const Segment> segments) const;

 private:
  TrainerKind kind_;
  std::vector<double> curvatures_;
  double noise_;
  double test_gap_;
  std::uint64_t test_seed_;
  double rate_max_;
  std::optional<std::size_t> rate_index_;
};

/// E[theta^2] recursion of the noisy quadratic:
/// m_i <- (1 - r h_i)^2 m_i + r^2 sigma^2, returning sum_i h_i m_i.
double expected_quadratic_loss(std::span<const double> curvatures, double noise,
                               std::span<const double> initial_second_moments,
                               std::span<const Segment> segments);

struct ScheduleOracleResult {
  std::vector<HpVector> schedule;
  double expected_loss = 0.0;
  std::size_t enumerated = 0;
};

inline constexpr std::size_t kOracleBudget = 1'000'000;

/// Exhaustive search over all |grid|^t_max piecewise-constant schedules of
/// the trainer's expected loss, each phase lasting `iterations_per_phase`.
/// Throws TrainerError when the enumeration exceeds kOracleBudget.
ScheduleOracleResult brute_force_schedule(const TrainerSpec& spec, const SearchSpace& space,
                                          std::span<const HpVector> grid, std::size_t t_max,
                                          std::size_t iterations_per_phase, std::uint64_t seed);

// ---------------------------------------------------------------------------
// External trainer bridge

/// Drives a worker process over newline-delimited JSON on its stdin/stdout.
/// Messages to one worker are serialized.
class ExternalTrainer final : public Trainer {
 public:
  ExternalTrainer(std::string command, std::vector<std::string> args, SearchSpace space,
                  std::chrono::milliseconds timeout);
  ~ExternalTrainer() override;

  ExternalTrainer(const ExternalTrainer&) = delete;
  ExternalTrainer& operator=(const ExternalTrainer&) = delete;

  TrainerState init(std::uint64_t seed) override;
  void step(TrainerState& state, const HpVector& hp, std::size_t iterations) override;
  Evaluation evaluate(const TrainerState& state) override;
  TrainerState fork(const TrainerState& state, std::uint64_t salt) override;

  /// Sends the shutdown message and reaps the worker; throws TrainerError on
  /// a nonzero exit status. Called by the destructor (errors swallowed there).
  void shutdown();

 private:
  class Process;

  std::string exchange(const std::string& request);

  std::string command_;
  std::vector<std::string> args_;
  SearchSpace space_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<Process> process_;
  std::mutex mutex_;
};

}  // namespace gpbt
