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

#include "pct/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "pct/rng.hpp"

namespace pct {

SyntheticSpec reference_task() {
  SyntheticSpec spec;
  spec.num_classes = 10;
  spec.input_dim = 20;
  spec.samples_per_class = 500;
  spec.cluster_spread = 1.0;
  spec.class_center_scale = 0.55;
  spec.label_noise = 0.05;
  spec.seed = 1;
  return spec;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "test";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + name + "'");
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) out.push_back(i);
  }
  return out;
}

void validate(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) throw std::invalid_argument("synthetic spec needs K >= 2");
  if (spec.samples_per_class < 2) throw std::invalid_argument("synthetic spec needs >= 2 samples per class");
  if (spec.input_dim == 0) throw std::invalid_argument("synthetic spec needs input_dim >= 1");
  if (!(spec.cluster_spread > 0.0)) throw std::invalid_argument("cluster_spread must be > 0");
  if (!(spec.class_center_scale > 0.0)) throw std::invalid_argument("class_center_scale must be > 0");
  if (!(spec.label_noise >= 0.0 && spec.label_noise < 1.0)) {
    throw std::invalid_argument("label_noise must lie in [0, 1)");
  }
}

Dataset generate(const SyntheticSpec& spec) {
  validate(spec);
  const std::size_t k = spec.num_classes;
  const std::size_t d = spec.input_dim;
  const std::size_t per = spec.samples_per_class;

  Matrix centers(k, d);
  CounterRng center_rng(spec.seed, RngStream::kDataCenters);
  for (double& v : centers.data()) v = spec.class_center_scale * center_rng.normal();

  const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(per))));
  const auto n_val = std::min(per - n_train, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(per))));

  Dataset ds;
  ds.num_classes = k;
  ds.features = Matrix(k * per, d);
  ds.labels.resize(k * per);
  ds.splits.resize(k * per);
  CounterRng sample_rng(spec.seed, RngStream::kDataSamples);
  for (std::size_t c = 0; c < k; ++c) {
    const auto order = random_permutation(per, CounterRng(spec.seed, RngStream::kDataSplit, c));
    for (std::size_t j = 0; j < per; ++j) {
      const std::size_t i = c * per + j;
      auto row = ds.features.row(i);
      for (std::size_t f = 0; f < d; ++f) row[f] = centers(c, f) + spec.cluster_spread * sample_rng.normal();
      ds.labels[i] = c;
      const std::size_t rank = order[j];
      ds.splits[i] = rank < n_train ? Split::kTrain : (rank < n_train + n_val ? Split::kValidation : Split::kTest);
    }
  }

  auto train = ds.indices(Split::kTrain);
  const auto n_noisy = static_cast<std::size_t>(std::llround(spec.label_noise * static_cast<double>(train.size())));
  CounterRng noise_rng(spec.seed, RngStream::kLabelNoise);
  noise_rng.shuffle(train);
  for (std::size_t j = 0; j < n_noisy; ++j) {
    ds.labels[train[j]] = static_cast<std::size_t>(noise_rng.index(k));
  }
  return ds;
}

const std::vector<std::size_t>& DatasetView::indices(Split split) const {
  switch (split) {
    case Split::kTrain: return train;
    case Split::kValidation: return validation;
    case Split::kTest: return test;
  }
  return test;
}

DatasetView full_view(const Dataset& dataset) {
  DatasetView v;
  v.train = dataset.indices(Split::kTrain);
  v.validation = dataset.indices(Split::kValidation);
  v.test = dataset.indices(Split::kTest);
  for (std::size_t c = 0; c < dataset.num_classes; ++c) {
    v.classes.push_back(c);
    v.label_map.emplace_back(c);
  }
  return v;
}

DatasetView half_samples_view(const Dataset& dataset, const DatasetView& base, double fraction,
                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in (0, 1]");
  if (fraction == 1.0) return base;
  // Stratify by observed train label, in view-class order.
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t i : base.train) by_class[dataset.labels[i]].push_back(i);
  DatasetView v = base;
  v.train.clear();
  for (std::size_t c : base.classes) {
    auto members = by_class[c];
    const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    if (keep == 0) {
      throw std::invalid_argument("fraction " + std::to_string(fraction) + " leaves class " +
                                  std::to_string(c) + " without training samples");
    }
    CounterRng(seed, RngStream::kSubsample, c).shuffle(members);
    members.resize(keep);
    v.train.insert(v.train.end(), members.begin(), members.end());
  }
  std::sort(v.train.begin(), v.train.end());
  return v;
}

DatasetView half_samples_view(const Dataset& dataset, double fraction, std::uint64_t seed) {
  return half_samples_view(dataset, full_view(dataset), fraction, seed);
}

DatasetView half_classes_view(const Dataset& dataset, std::vector<std::size_t> class_subset) {
  if (class_subset.empty()) throw std::invalid_argument("class subset is empty");
  std::sort(class_subset.begin(), class_subset.end());
  if (std::adjacent_find(class_subset.begin(), class_subset.end()) != class_subset.end()) {
    throw std::invalid_argument("class subset has duplicates");
  }
  if (class_subset.back() >= dataset.num_classes) {
    throw std::invalid_argument("class " + std::to_string(class_subset.back()) + " outside the dataset");
  }
  DatasetView v;
  v.classes = class_subset;
  v.label_map.assign(dataset.num_classes, std::nullopt);
  for (std::size_t j = 0; j < class_subset.size(); ++j) v.label_map[class_subset[j]] = j;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!v.label_map[dataset.labels[i]]) continue;
    switch (dataset.splits[i]) {
      case Split::kTrain: v.train.push_back(i); break;
      case Split::kValidation: v.validation.push_back(i); break;
      case Split::kTest: v.test.push_back(i); break;
    }
  }
  return v;
}

TrainingData materialize(const Dataset& dataset, const DatasetView& view, Split split) {
  const auto& idx = view.indices(split);
  TrainingData data;
  data.num_classes = view.num_classes();
  data.features = Matrix(idx.size(), dataset.features.cols());
  data.labels.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = dataset.features.row(idx[r]);
    std::copy(src.begin(), src.end(), data.features.row(r).begin());
    const auto mapped = view.label_map.at(dataset.labels[idx[r]]);
    if (!mapped) throw std::logic_error("view contains a sample outside its class set");
    data.labels.push_back(*mapped);
  }
  return data;
}

std::string to_string(UpdateKind kind) {
  switch (kind) {
    case UpdateKind::kSameArchRetrain: return "SameArchRetrain";
    case UpdateKind::kArchChange: return "ArchChange";
    case UpdateKind::kSampleGrowth: return "SampleGrowth";
    case UpdateKind::kClassGrowth: return "ClassGrowth";
    case UpdateKind::kTwoChanges: return "TwoChanges";
    case UpdateKind::kFineTune: return "FineTune";
  }
  return "SameArchRetrain";
}

UpdateKind update_kind_from_string(const std::string& name) {
  for (auto k : {UpdateKind::kSameArchRetrain, UpdateKind::kArchChange, UpdateKind::kSampleGrowth,
                 UpdateKind::kClassGrowth, UpdateKind::kTwoChanges, UpdateKind::kFineTune}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown scenario kind '" + name + "'");
}

UpdateScenario preset_scenario(UpdateKind kind, std::size_t num_classes) {
  const std::vector<std::size_t> small{32};
  const std::vector<std::size_t> large{64, 64};
  UpdateScenario s;
  s.kind = kind;
  switch (kind) {
    case UpdateKind::kSameArchRetrain:
      s.old_hidden = s.new_hidden = {64};
      break;
    case UpdateKind::kArchChange:
      s.old_hidden = small;
      s.new_hidden = large;
      break;
    case UpdateKind::kSampleGrowth:
      s.old_hidden = s.new_hidden = {64};
      s.old_data.sample_fraction = 0.5;
      break;
    case UpdateKind::kClassGrowth:
      s.old_hidden = s.new_hidden = {64};
      for (std::size_t c = 0; c < num_classes / 2; ++c) s.old_data.class_subset.push_back(c);
      break;
    case UpdateKind::kTwoChanges:
      s.old_hidden = small;
      s.new_hidden = large;
      s.old_data.sample_fraction = 0.5;
      break;
    case UpdateKind::kFineTune:
      s.old_hidden = s.new_hidden = {64};
      s.old_data.sample_fraction = 0.5;
      s.init_from_old = true;
      break;
  }
  return s;
}

void validate(const UpdateScenario& s, std::size_t num_classes) {
  for (const auto* data : {&s.old_data, &s.new_data}) {
    if (!(data->sample_fraction > 0.0 && data->sample_fraction <= 1.0)) {
      throw std::invalid_argument("sample_fraction must lie in (0, 1]");
    }
    for (std::size_t c : data->class_subset) {
      if (c >= num_classes) throw std::invalid_argument("class subset entry " + std::to_string(c) + " >= K");
    }
  }
  const auto covers = [](const std::vector<std::size_t>& outer, const std::vector<std::size_t>& inner) {
    if (outer.empty()) return true;
    if (inner.empty()) return false;
    std::set<std::size_t> o(outer.begin(), outer.end());
    return std::all_of(inner.begin(), inner.end(), [&](std::size_t c) { return o.count(c) > 0; });
  };
  if (!covers(s.new_data.class_subset, s.old_data.class_subset)) {
    throw std::invalid_argument("new data view must contain every old class");
  }
  const bool same_classes = s.old_data.class_subset == s.new_data.class_subset;
  switch (s.kind) {
    case UpdateKind::kFineTune:
      if (s.old_hidden != s.new_hidden) throw std::invalid_argument("FineTune requires identical old/new architectures");
      if (!s.init_from_old) throw std::invalid_argument("FineTune requires init_from_old = true");
      if (!same_classes) throw std::invalid_argument("FineTune requires identical old/new class sets");
      break;
    case UpdateKind::kClassGrowth:
      if (s.old_data.class_subset.empty()) throw std::invalid_argument("ClassGrowth requires an old class subset");
      if (same_classes) throw std::invalid_argument("ClassGrowth requires the new view to add classes");
      [[fallthrough]];
    default:
      if (s.init_from_old) throw std::invalid_argument("init_from_old is only valid for FineTune");
      break;
  }
}

namespace {

DatasetView make_view(const Dataset& dataset, const DataViewSpec& spec, std::uint64_t seed) {
  DatasetView v = spec.class_subset.empty() ? full_view(dataset) : half_classes_view(dataset, spec.class_subset);
  return half_samples_view(dataset, v, spec.sample_fraction, seed);
}

}  // namespace

std::vector<std::size_t> ScenarioBuild::old_to_new_classes() const {
  std::vector<std::size_t> out;
  for (std::size_t original : plan.old_to_original) {
    const auto mapped = new_job.view.label_map.at(original);
    if (!mapped) throw std::logic_error("old class missing from the new view");
    out.push_back(*mapped);
  }
  return out;
}

std::vector<std::size_t> ScenarioBuild::restricted_indices(const Dataset& dataset, Split split) const {
  std::vector<bool> in_old(dataset.num_classes, false);
  for (std::size_t c : plan.old_to_original) in_old[c] = true;
  std::vector<std::size_t> out;
  for (std::size_t i : new_job.view.indices(split)) {
    if (in_old[dataset.labels[i]]) out.push_back(i);
  }
  return out;
}

ScenarioBuild build_scenario(const UpdateScenario& scenario, const Dataset& dataset,
                             const SeedPolicy& seeds) {
  validate(scenario, dataset.num_classes);
  ScenarioBuild b;
  // The subsample seed is tied to the dataset, not the repetition, so every
  // repetition sees the same old/new data.
  b.old_job.view = make_view(dataset, scenario.old_data, seeds.base + 7919);
  b.new_job.view = make_view(dataset, scenario.new_data, seeds.base + 7919);
  b.old_job.spec = dense_spec(dataset.features.cols(), scenario.old_hidden, b.old_job.view.num_classes());
  b.new_job.spec = dense_spec(dataset.features.cols(), scenario.new_hidden, b.new_job.view.num_classes());
  b.old_job.seed = seeds.old_seed();
  b.new_job.seed = seeds.new_seed();
  b.new_job.init_from_old = scenario.init_from_old;

  b.plan.split = Split::kTest;
  b.plan.old_to_original = b.old_job.view.classes;
  b.plan.new_to_original = b.new_job.view.classes;
  b.plan.test_indices = b.restricted_indices(dataset, Split::kTest);
  return b;
}

}  // namespace pct
