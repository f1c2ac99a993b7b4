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

#include "pct/pc_loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <type_traits>

namespace pct {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("logit length mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

}  // namespace

std::string to_string(PCMode mode) {
  switch (mode) {
    case PCMode::kNone: return "None";
    case PCMode::kNaive: return "Naive";
    case PCMode::kFocal: return "Focal";
  }
  return "None";
}

PCMode pc_mode_from_string(const std::string& name) {
  if (name == "None") return PCMode::kNone;
  if (name == "Naive") return PCMode::kNaive;
  if (name == "Focal") return PCMode::kFocal;
  throw std::invalid_argument("unknown pc mode '" + name + "'");
}

void validate(const PCLossConfig& config) {
  if (!(config.lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (config.mode == PCMode::kFocal) {
    const auto& f = config.filter;
    if (!(f.alpha >= 0.0) || !(f.beta >= 0.0)) throw std::invalid_argument("alpha and beta must be >= 0");
    if (const auto* kl = std::get_if<KLDistance>(&config.distance); kl && !(kl->tau > 0.0)) {
      throw std::invalid_argument("KL temperature must be > 0");
    }
  }
}

OldModelOracle::OldModelOracle(Matrix old_logits, std::vector<std::size_t> labels,
                               std::vector<std::size_t> class_map)
    : logits_(std::move(old_logits)), class_map_(std::move(class_map)) {
  if (labels.size() != logits_.rows()) throw std::invalid_argument("oracle labels/logits length mismatch");
  if (class_map_.empty()) {
    for (std::size_t j = 0; j < logits_.cols(); ++j) class_map_.push_back(j);
  }
  if (class_map_.size() != logits_.cols()) {
    throw std::invalid_argument("class map covers " + std::to_string(class_map_.size()) +
                                " classes, old model has " + std::to_string(logits_.cols()));
  }
  predictions_.reserve(labels.size());
  correct_.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t pred = class_map_[argmax(logits_.row(i))];
    predictions_.push_back(pred);
    correct_.push_back(pred == labels[i]);
  }
}

OldModelOracle OldModelOracle::from_model(const MLPModel& old_model, const TrainingData& data,
                                          std::vector<std::size_t> class_map) {
  Matrix cached(data.size(), old_model.num_classes());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector z = pct::logits(old_model, data.features.row(i));
    std::copy(z.begin(), z.end(), cached.row(i).begin());
  }
  return OldModelOracle(std::move(cached), data.labels, std::move(class_map));
}

std::span<const double> OldModelOracle::logits(std::size_t sample) const {
  if (sample >= size()) throw std::out_of_range("no cached old logits for sample " + std::to_string(sample));
  return logits_.row(sample);
}

bool OldModelOracle::old_correct(std::size_t sample) const {
  if (sample >= size()) throw std::out_of_range("no cached old logits for sample " + std::to_string(sample));
  return correct_[sample];
}

std::size_t OldModelOracle::old_prediction(std::size_t sample) const {
  if (sample >= size()) throw std::out_of_range("no cached old logits for sample " + std::to_string(sample));
  return predictions_[sample];
}

double filter_weight(const FilterSpec& spec, bool old_correct) noexcept {
  return old_correct ? spec.alpha + spec.beta : spec.alpha;
}

LossGrad distance_kl(std::span<const double> new_logits, std::span<const double> old_logits,
                     double tau) {
  require_same_length(new_logits, old_logits);
  if (!(tau > 0.0)) throw std::invalid_argument("KL temperature must be > 0");
  Vector scaled_new(new_logits.size());
  Vector scaled_old(old_logits.size());
  for (std::size_t k = 0; k < new_logits.size(); ++k) {
    scaled_new[k] = new_logits[k] / tau;
    scaled_old[k] = old_logits[k] / tau;
  }
  const Vector log_q = log_softmax(scaled_new);
  const Vector log_p = log_softmax(scaled_old);
  LossGrad out{0.0, Vector(new_logits.size())};
  for (std::size_t k = 0; k < new_logits.size(); ++k) {
    const double p = std::exp(log_p[k]);
    out.value += p * (log_p[k] - log_q[k]);
    out.grad[k] = (std::exp(log_q[k]) - p) / tau;
  }
  // Rounding can leave a tiny negative value when the distributions coincide.
  if (out.value < 0.0) out.value = 0.0;
  return out;
}

LossGrad distance_lm(std::span<const double> new_logits, std::span<const double> old_logits) {
  require_same_length(new_logits, old_logits);
  LossGrad out{0.0, Vector(new_logits.size())};
  for (std::size_t k = 0; k < new_logits.size(); ++k) {
    const double d = new_logits[k] - old_logits[k];
    out.value += 0.5 * d * d;
    out.grad[k] = d;
  }
  return out;
}

LossGrad distance(const DistanceKind& kind, std::span<const double> new_logits,
                  std::span<const double> old_logits) {
  return std::visit(
      [&](const auto& d) -> LossGrad {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, KLDistance>) {
          return distance_kl(new_logits, old_logits, d.tau);
        } else {
          return distance_lm(new_logits, old_logits);
        }
      },
      kind);
}

LossGrad pc_loss_naive(std::span<const double> new_logits, std::size_t label, bool old_correct) {
  LossGrad ce = cross_entropy_with_grad(new_logits, label);
  if (!old_correct) return {0.0, Vector(new_logits.size(), 0.0)};
  return ce;
}

LossGrad pc_loss_focal(std::span<const double> new_logits, const OldModelOracle& oracle,
                       std::size_t sample, const FilterSpec& filter, const DistanceKind& kind) {
  const auto old = oracle.logits(sample);
  const auto& map = oracle.class_map();
  Vector restricted(map.size());
  for (std::size_t j = 0; j < map.size(); ++j) {
    if (map[j] >= new_logits.size()) {
      throw std::invalid_argument("old class " + std::to_string(j) + " maps outside the new label space");
    }
    restricted[j] = new_logits[map[j]];
  }
  const double weight = filter_weight(filter, oracle.old_correct(sample));
  const LossGrad d = distance(kind, restricted, old);
  LossGrad out{weight * d.value, Vector(new_logits.size(), 0.0)};
  for (std::size_t j = 0; j < map.size(); ++j) out.grad[map[j]] = weight * d.grad[j];
  return out;
}

LossGrad total_objective(std::span<const double> new_logits, std::size_t label,
                         const OldModelOracle* oracle, std::size_t sample,
                         const PCLossConfig& config) {
  LossGrad out = cross_entropy_with_grad(new_logits, label);
  if (config.mode == PCMode::kNone) return out;
  if (oracle == nullptr) throw std::invalid_argument("PC loss requires an old-model oracle");
  const LossGrad pc =
      config.mode == PCMode::kNaive
          ? pc_loss_naive(new_logits, label, oracle->old_correct(sample))
          : pc_loss_focal(new_logits, *oracle, sample, config.filter, config.distance);
  out.value += config.lambda * pc.value;
  for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad[k] += config.lambda * pc.grad[k];
  return out;
}

SampleObjective make_objective(const PCLossConfig& config,
                               std::shared_ptr<const OldModelOracle> oracle) {
  validate(config);
  if (config.mode != PCMode::kNone && !oracle) {
    throw std::invalid_argument("PC loss requires an old-model oracle");
  }
  return [config, oracle = std::move(oracle)](std::size_t sample, std::span<const double> logits,
                                              std::size_t label) {
    return total_objective(logits, label, oracle.get(), sample, config);
  };
}

}  // namespace pct
