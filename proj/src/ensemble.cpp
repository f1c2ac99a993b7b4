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

#include "pct/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <stdexcept>
#include <thread>

namespace pct {

Ensemble::Ensemble(std::vector<MLPModel> members) : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("ensemble needs at least one member");
  for (const auto& m : members_) {
    if (m.input_dim() != input_dim() || m.num_classes() != num_classes()) {
      throw std::invalid_argument("ensemble members disagree on input or output dimension");
    }
  }
}

std::size_t Ensemble::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& m : members_) n += m.parameter_count();
  return n;
}

Ensemble Ensemble::prefix(std::size_t count) const {
  if (count == 0 || count > members_.size()) throw std::out_of_range("ensemble prefix size out of range");
  return Ensemble(std::vector<MLPModel>(members_.begin(), members_.begin() + static_cast<std::ptrdiff_t>(count)));
}

Vector ensemble_logits(const Ensemble& ensemble, std::span<const double> x) {
  Vector mean(ensemble.num_classes(), 0.0);
  for (const auto& m : ensemble.members()) {
    const Vector z = logits(m, x);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += z[k];
  }
  const double inv = 1.0 / static_cast<double>(ensemble.size());
  for (double& v : mean) v *= inv;
  return mean;
}

std::size_t ensemble_predict(const Ensemble& ensemble, std::span<const double> x) {
  return argmax(ensemble_logits(ensemble, x));
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Ensemble train_ensemble(const ModelSpec& spec, const TrainingData& data, const TrainConfig& config,
                        std::size_t size, std::uint64_t base_seed) {
  if (size == 0) throw std::invalid_argument("ensemble size must be >= 1");
  std::vector<MLPModel> members(size);
  parallel_for(size, [&](std::size_t j) {
    TrainConfig member_config = config;
    member_config.seed = base_seed + j;
    members[j] = train(init_model(spec, member_config.seed), data, cross_entropy_objective(), member_config).model;
  });
  return Ensemble(std::move(members));
}

std::vector<PredictionRecord> ensemble_records(const Ensemble& old_ensemble, const Ensemble& new_ensemble,
                                               const TrainingData& data) {
  std::vector<PredictionRecord> records;
  records.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.features.row(i);
    records.push_back({i, data.labels[i], ensemble_predict(old_ensemble, x), ensemble_predict(new_ensemble, x)});
  }
  return records;
}

SweepResult sweep_ensemble_size(const ModelSpec& old_spec, const ModelSpec& new_spec,
                                const TrainingData& train_data, const TrainingData& eval_data,
                                const TrainConfig& config, std::span<const std::size_t> sizes,
                                const SweepSeeds& seeds) {
  if (sizes.empty()) throw std::invalid_argument("no ensemble sizes given");
  if (!std::is_sorted(sizes.begin(), sizes.end()) || sizes.front() == 0) {
    throw std::invalid_argument("ensemble sizes must be positive and ascending");
  }
  const std::size_t largest = sizes.back();
  const auto lo = std::max(seeds.old_base, seeds.new_base);
  const auto hi = std::min(seeds.old_base, seeds.new_base) + largest;
  if (lo < hi) throw std::invalid_argument("old and new ensemble seed ranges overlap");

  const Ensemble old_all = train_ensemble(old_spec, train_data, config, largest, seeds.old_base);
  const Ensemble new_all = train_ensemble(new_spec, train_data, config, largest, seeds.new_base);
  SweepResult result;
  for (std::size_t size : sizes) {
    const auto report = flip_report(ensemble_records(old_all.prefix(size), new_all.prefix(size), eval_data));
    result.rows.push_back({size, report.er_old, report.er_new, report.nfr, report.rel_nfr});
  }
  return result;
}

}  // namespace pct
