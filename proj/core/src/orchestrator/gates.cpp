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

#include "gpbt/orchestrator.hpp"
#include "gpbt/stats.hpp"

namespace gpbt {

MedianDecision median_gate(std::span<const double> early_losses_so_far, double candidate) {
  if (early_losses_so_far.empty()) return MedianDecision::keep_training;
  return candidate > stats::median(early_losses_so_far) ? MedianDecision::early_stop
                                                        : MedianDecision::keep_training;
}

RunDecision convergence_gate(std::span<const double> best_seen, double threshold,
                             std::size_t window) {
  if (window == 0 || best_seen.size() < window + 1) return RunDecision::keep_going;
  const std::size_t last = best_seen.size() - 1;
  double sum = 0.0;
  for (std::size_t k = 0; k < window; ++k) sum += best_seen[last - k] - best_seen[last - k - 1];
  const double mean_diff = sum / static_cast<double>(window);
  return mean_diff > -threshold ? RunDecision::halt_run : RunDecision::keep_going;
}

GenerationDecision satisfaction_gate(std::span<const double> current,
                                     std::span<const double> previous, double quantile) {
  if (previous.empty() || current.empty()) return GenerationDecision::keep_going;
  const double bar = stats::quantile_lower(previous, quantile);
  const bool satisfied =
      std::any_of(current.begin(), current.end(), [&](double loss) { return loss <= bar; });
  return satisfied ? GenerationDecision::end_generation : GenerationDecision::keep_going;
}

MedianDecision EarlyEvalLedger::submit(double early_loss) {
  std::lock_guard lock(mutex_);
  const auto decision = median_gate(losses_, early_loss);
  losses_.push_back(early_loss);
  return decision;
}

std::vector<double> EarlyEvalLedger::snapshot() const {
  std::lock_guard lock(mutex_);
  return losses_;
}

}  // namespace gpbt
