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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pct/flip_metrics.hpp"
#include "pct/nn.hpp"

namespace pct {

/// Independently trained models whose discriminant is the mean of the member
/// logits. Members may differ in width/depth but share input and output dims.
class Ensemble {
 public:
  explicit Ensemble(std::vector<MLPModel> members);

  std::size_t size() const noexcept { return members_.size(); }
  std::size_t input_dim() const noexcept { return members_.front().input_dim(); }
  std::size_t num_classes() const noexcept { return members_.front().num_classes(); }
  std::size_t parameter_count() const noexcept;
  const std::vector<MLPModel>& members() const noexcept { return members_; }

  /// The first `count` members as an ensemble of their own.
  Ensemble prefix(std::size_t count) const;

 private:
  std::vector<MLPModel> members_;
};

Vector ensemble_logits(const Ensemble& ensemble, std::span<const double> x);
std::size_t ensemble_predict(const Ensemble& ensemble, std::span<const double> x);

/// Runs fn(0..count-1) on up to hardware_concurrency threads. Exceptions are
/// rethrown (the first by index) after all tasks finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

/// Member j is initialized and shuffled with seed base_seed + j and trained
/// under plain cross-entropy.
Ensemble train_ensemble(const ModelSpec& spec, const TrainingData& data, const TrainConfig& config,
                        std::size_t size, std::uint64_t base_seed);

struct SweepRow {
  std::size_t size = 0;
  double er_old = 0.0;
  double er_new = 0.0;
  double nfr = 0.0;
  std::optional<double> rel_nfr;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

struct SweepSeeds {
  std::uint64_t old_base = 0;
  std::uint64_t new_base = 0;
};

/// Trains max(sizes) members for each side once and evaluates every prefix.
/// The two seed ranges [base, base + max(sizes)) must not overlap.
SweepResult sweep_ensemble_size(const ModelSpec& old_spec, const ModelSpec& new_spec,
                                const TrainingData& train_data, const TrainingData& eval_data,
                                const TrainConfig& config, std::span<const std::size_t> sizes,
                                const SweepSeeds& seeds);

/// Prediction records of two ensembles on a labelled set.
std::vector<PredictionRecord> ensemble_records(const Ensemble& old_ensemble, const Ensemble& new_ensemble,
                                               const TrainingData& data);

}  // namespace pct
