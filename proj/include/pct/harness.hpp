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

// Experiment runner: trains the old job once, caches its outputs, trains the
// new job under a chosen method and evaluates flips after every epoch.
//
// Seed policy (base = train.seed):
//   old model             base
//   new model             base + 1000 + repetition
//   old ensemble member j base + 100000 + j
//   new ensemble member j base + 200000 + 1000 * repetition + j

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pct/ensemble.hpp"
#include "pct/flip_metrics.hpp"
#include "pct/nn.hpp"
#include "pct/pc_loss.hpp"
#include "pct/scenarios.hpp"

namespace pct {

enum class Method { kNoTreatment, kNaive, kFDKL, kFDLM, kEnsemble };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

inline constexpr std::size_t kMaxEnsembleSize = 1000;

struct ExperimentConfig {
  std::string name;  // row label; defaults to the method name
  UpdateScenario scenario;
  SyntheticSpec dataset = reference_task();
  TrainConfig train;
  Method method = Method::kNoTreatment;
  std::size_t ensemble_size = 16;
  PCLossConfig pc;
  std::size_t repetitions = 1;
  std::string output_dir = "out";

  std::string label() const { return name.empty() ? to_string(method) : name; }
  bool operator==(const ExperimentConfig&) const = default;
};

/// The desk-scale default protocol: 30 epochs, lr 0.01 decayed x0.1 every 10,
/// momentum 0.9, batch 64, lambda 1, alpha 1, beta 5, tau 100.
ExperimentConfig default_config(Method method);

/// Sets pc.mode / pc.distance to what the method implies, keeping lambda,
/// the filter and tau.
void apply_method(ExperimentConfig& config, Method method);

/// Throws std::invalid_argument when fields are out of range or the PC loss
/// configuration contradicts the method.
void validate(const ExperimentConfig& config);

struct EpochRow {
  std::size_t epoch = 0;
  double er_train = 0.0;
  double er_val = 0.0;
  double nfr_val = 0.0;
  std::optional<double> rel_nfr_val;
  double nfr_train = 0.0;

  bool operator==(const EpochRow&) const = default;
};

struct RunArtifacts {
  std::size_t repetition = 0;
  bool ok = false;
  std::string error;
  std::vector<EpochRow> series;
  FlipReport final_report;
  FlipReport final_train_report;
  std::size_t new_param_count = 0;
  std::vector<PredictionRecord> records;
  std::vector<UncertaintyRecord> uncertainty;  // only for ensemble runs
};

struct Stat {
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Stat summarize(std::vector<double> values);

/// Statistics over the finished repetitions; NaN when none finished.
struct Summary {
  std::size_t runs = 0;
  std::size_t failed = 0;
  Stat er_old;
  Stat er_new;
  Stat nfr;
  Stat pfr;
  std::optional<Stat> rel_nfr;
  std::size_t new_param_count = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunArtifacts> runs;
  Summary summary;
};

/// Dataset, scenario build and everything derived from the frozen old job.
/// Immutable once prepared; shared by all methods and repetitions.
class ExperimentContext {
 public:
  /// `ensemble_size` > 0 additionally trains an old ensemble of that size.
  static ExperimentContext prepare(const ExperimentConfig& config, std::size_t ensemble_size = 0);

  bool compatible_with(const ExperimentConfig& config) const;

  const Dataset& dataset() const noexcept { return dataset_; }
  const ScenarioBuild& build() const noexcept { return build_; }
  const MLPModel& old_model() const noexcept { return old_model_; }
  const TrainingData& new_train() const noexcept { return new_train_; }
  const std::shared_ptr<const OldModelOracle>& oracle() const noexcept { return oracle_; }
  const std::optional<Ensemble>& old_ensemble() const noexcept { return old_ensemble_; }
  /// Old predictions (original labels) on the pinned evaluation samples.
  const std::vector<std::size_t>& old_eval_predictions() const noexcept { return old_eval_pred_; }
  const std::vector<std::size_t>& old_train_predictions() const noexcept { return old_train_pred_; }
  const std::vector<std::size_t>& train_eval_indices() const noexcept { return train_eval_idx_; }

  RunArtifacts run(const ExperimentConfig& config, std::size_t repetition) const;

 private:
  ExperimentConfig config_;
  Dataset dataset_;
  ScenarioBuild build_;
  MLPModel old_model_;
  TrainingData old_train_;
  TrainingData new_train_;
  std::shared_ptr<const OldModelOracle> oracle_;
  std::optional<Ensemble> old_ensemble_;
  std::vector<std::size_t> old_eval_pred_;
  std::vector<std::size_t> train_eval_idx_;
  std::vector<std::size_t> old_train_pred_;
};

ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentContext& context, const ExperimentConfig& config);

struct ComparisonRow {
  std::string method;
  double er_old = 0.0;
  double er_new = 0.0;
  double nfr = 0.0;
  std::optional<double> rel_nfr;
  std::size_t params = 0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::vector<ExperimentResult> results;
};

/// All configs must share scenario, dataset, training protocol and
/// repetitions; the old job is trained once and reused by every row.
Comparison compare_methods(std::span<const ExperimentConfig> configs);

struct FocalSweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  double er_new = 0.0;
  double nfr = 0.0;
  std::optional<double> rel_nfr;
  std::size_t runs = 0;
  std::size_t failed = 0;  // repetitions that stopped on a non-finite loss
};

struct FocalSweep {
  std::vector<FocalSweepRow> rows;
  std::vector<ExperimentResult> results;
};

/// Re-runs a focal-distillation config once per (alpha, beta) grid point.
FocalSweep sweep_focal(const ExperimentConfig& config, std::span<const FilterSpec> grid);

/// Ensemble-size sweep over `repetitions` disjoint seed ranges, using the
/// scenario's old/new architectures on the full training split.
std::vector<SweepResult> sweep_ensemble(const ExperimentConfig& config, std::span<const std::size_t> sizes);

/// Per-size medians across repetitions.
SweepResult median_sweep(std::span<const SweepResult> results);

}  // namespace pct
