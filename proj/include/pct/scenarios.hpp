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

// Synthetic Gaussian-cluster classification data and declarative
// old -> new model update scenarios built on top of it.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pct/matrix.hpp"
#include "pct/nn.hpp"

namespace pct {

struct SyntheticSpec {
  std::size_t num_classes = 10;
  std::size_t input_dim = 20;
  std::size_t samples_per_class = 500;
  double cluster_spread = 1.0;
  double class_center_scale = 1.0;
  double label_noise = 0.05;
  std::uint64_t seed = 1;

  bool operator==(const SyntheticSpec&) const = default;
};

/// Reference task: plain CE training of the reference MLPs lands at a test
/// error in the 15-30% range on it.
SyntheticSpec reference_task();

enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct Dataset {
  Matrix features;                   // N x input_dim
  std::vector<std::size_t> labels;   // observed labels (train labels may be noisy)
  std::vector<Split> splits;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::vector<std::size_t> indices(Split split) const;
};

void validate(const SyntheticSpec& spec);

/// Isotropic Gaussian clusters, stratified 70/10/20 split per class, and
/// `label_noise` of the train labels resampled uniformly over all classes.
Dataset generate(const SyntheticSpec& spec);

/// A read-only selection over a Dataset. Labels are remapped through
/// `label_map` (original -> view class); `classes` lists the original classes
/// in view order.
struct DatasetView {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::vector<std::size_t> classes;
  std::vector<std::optional<std::size_t>> label_map;

  std::size_t num_classes() const noexcept { return classes.size(); }
  const std::vector<std::size_t>& indices(Split split) const;
};

DatasetView full_view(const Dataset& dataset);

/// Stratified per-class subset of the train split; validation and test are
/// untouched.
DatasetView half_samples_view(const Dataset& dataset, const DatasetView& base, double fraction,
                              std::uint64_t seed);
DatasetView half_samples_view(const Dataset& dataset, double fraction, std::uint64_t seed);

/// Keeps only samples of `class_subset` and relabels them contiguously in
/// increasing order of original label.
DatasetView half_classes_view(const Dataset& dataset, std::vector<std::size_t> class_subset);

TrainingData materialize(const Dataset& dataset, const DatasetView& view, Split split);

enum class UpdateKind { kSameArchRetrain, kArchChange, kSampleGrowth, kClassGrowth, kTwoChanges, kFineTune };

std::string to_string(UpdateKind kind);
UpdateKind update_kind_from_string(const std::string& name);

/// How a job sees the dataset. Empty class_subset means all classes.
struct DataViewSpec {
  double sample_fraction = 1.0;
  std::vector<std::size_t> class_subset;

  bool operator==(const DataViewSpec&) const = default;
};

struct UpdateScenario {
  UpdateKind kind = UpdateKind::kSameArchRetrain;
  std::vector<std::size_t> old_hidden{64};
  std::vector<std::size_t> new_hidden{64};
  DataViewSpec old_data;
  DataViewSpec new_data;
  bool init_from_old = false;

  bool operator==(const UpdateScenario&) const = default;
};

/// Canonical scenario of each kind for a K-class task.
UpdateScenario preset_scenario(UpdateKind kind, std::size_t num_classes);

struct SeedPolicy {
  std::uint64_t base = 0;
  std::size_t repetition = 0;

  std::uint64_t old_seed() const noexcept { return base; }
  std::uint64_t new_seed() const noexcept { return base + 1000 + repetition; }
};

struct TrainingJob {
  ModelSpec spec;
  DatasetView view;
  std::uint64_t seed = 0;
  bool init_from_old = false;
};

/// Pins what the flip metrics are computed on. `old_to_original[j]` is the
/// original label of old class j; records are restricted to samples whose
/// label lies in the old model's class set.
struct EvaluationPlan {
  Split split = Split::kTest;
  std::vector<std::size_t> test_indices;
  std::vector<std::size_t> old_to_original;
  std::vector<std::size_t> new_to_original;
};

struct ScenarioBuild {
  TrainingJob old_job;
  TrainingJob new_job;
  EvaluationPlan plan;

  /// Old class j -> new-view class index (for distillation on the shared classes).
  std::vector<std::size_t> old_to_new_classes() const;
  /// Indices of `split` samples whose label is in the old class set.
  std::vector<std::size_t> restricted_indices(const Dataset& dataset, Split split) const;
};

void validate(const UpdateScenario& scenario, std::size_t num_classes);

ScenarioBuild build_scenario(const UpdateScenario& scenario, const Dataset& dataset,
                             const SeedPolicy& seeds = {});

}  // namespace pct
