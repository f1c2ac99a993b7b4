// Copyright 2026 The pctlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Positive-congruent training losses.
//
// The training objective for a sample is
//
//   CE(new, y) + lambda * PC(new; old)
//
// where PC is either the naive re-weighting 1[old correct] * CE(new, y) or
// focal distillation (alpha + beta * 1[old correct]) * D(new, old), with D a
// temperature-softened KL divergence or half squared logit distance. The old
// model is frozen: its logits and correctness flags are computed once over the
// training set and cached in an OldModelOracle.

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pct/matrix.hpp"
#include "pct/nn.hpp"

namespace pct {

struct FilterSpec {
  double alpha = 1.0;  // base weight, all samples
  double beta = 5.0;   // extra weight when the old model was correct

  bool operator==(const FilterSpec&) const = default;
};

/// KL(softmax(old / tau) || softmax(new / tau)).
struct KLDistance {
  double tau = 100.0;
  bool operator==(const KLDistance&) const = default;
};

/// 0.5 * ||new - old||^2.
struct LogitMatchDistance {
  bool operator==(const LogitMatchDistance&) const = default;
};

using DistanceKind = std::variant<KLDistance, LogitMatchDistance>;

enum class PCMode { kNone, kNaive, kFocal };

std::string to_string(PCMode mode);
PCMode pc_mode_from_string(const std::string& name);

struct PCLossConfig {
  double lambda = 1.0;
  FilterSpec filter;
  DistanceKind distance = LogitMatchDistance{};
  PCMode mode = PCMode::kNone;

  bool operator==(const PCLossConfig&) const = default;
};

void validate(const PCLossConfig& config);

/// Frozen reference-model outputs over a training set.
///
/// `class_map[j]` is the training-set class that old class j corresponds to.
/// It is the identity when both models share a label space; when the new
/// model has more classes the old classes occupy a prefix of the new ones.
class OldModelOracle {
 public:
  OldModelOracle(Matrix old_logits, std::vector<std::size_t> labels,
                 std::vector<std::size_t> class_map = {});

  /// Evaluates `old_model` on every training sample.
  static OldModelOracle from_model(const MLPModel& old_model, const TrainingData& data,
                                   std::vector<std::size_t> class_map = {});

  std::size_t size() const noexcept { return correct_.size(); }
  std::size_t old_classes() const noexcept { return logits_.cols(); }
  std::span<const double> logits(std::size_t sample) const;
  bool old_correct(std::size_t sample) const;
  /// Old prediction expressed in the training set's label space.
  std::size_t old_prediction(std::size_t sample) const;
  const std::vector<std::size_t>& class_map() const noexcept { return class_map_; }
  const Matrix& all_logits() const noexcept { return logits_; }

 private:
  Matrix logits_;
  std::vector<std::size_t> class_map_;
  std::vector<std::size_t> predictions_;
  std::vector<bool> correct_;
};

/// alpha + beta if the old model was correct, else alpha.
double filter_weight(const FilterSpec& spec, bool old_correct) noexcept;

LossGrad distance_kl(std::span<const double> new_logits, std::span<const double> old_logits,
                     double tau);
LossGrad distance_lm(std::span<const double> new_logits, std::span<const double> old_logits);
LossGrad distance(const DistanceKind& kind, std::span<const double> new_logits,
                  std::span<const double> old_logits);

/// 1[old correct] * CE(new, label).
LossGrad pc_loss_naive(std::span<const double> new_logits, std::size_t label, bool old_correct);

/// filter_weight * D(new restricted to the old classes, old). The gradient has
/// the length of `new_logits`; entries outside the old label space are zero.
LossGrad pc_loss_focal(std::span<const double> new_logits, const OldModelOracle& oracle,
                       std::size_t sample, const FilterSpec& filter, const DistanceKind& kind);

/// CE + lambda * (mode-selected PC term). `oracle` may be null only for
/// PCMode::kNone.
LossGrad total_objective(std::span<const double> new_logits, std::size_t label,
                         const OldModelOracle* oracle, std::size_t sample,
                         const PCLossConfig& config);

SampleObjective make_objective(const PCLossConfig& config,
                               std::shared_ptr<const OldModelOracle> oracle);

}  // namespace pct
