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

// Feed-forward classifier engine: dense layers, exact backpropagation and
// momentum SGD with a stepped learning-rate schedule.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pct/matrix.hpp"

namespace pct {

enum class Activation { kRelu, kIdentity };

std::string to_string(Activation activation);
Activation activation_from_string(const std::string& name);

struct LayerSpec {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  Activation activation = Activation::kRelu;

  bool operator==(const LayerSpec&) const = default;
};

using ModelSpec = std::vector<LayerSpec>;

/// Chains input -> hidden widths (relu) -> classes (identity logits).
ModelSpec dense_spec(std::size_t input_dim, std::span<const std::size_t> hidden,
                     std::size_t num_classes);

struct DenseLayer {
  Matrix weights;  // outputs x inputs
  Vector bias;
  Activation activation = Activation::kRelu;

  bool operator==(const DenseLayer&) const = default;
};

struct MLPModel {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const noexcept { return layers.empty() ? 0 : layers.front().weights.cols(); }
  std::size_t num_classes() const noexcept { return layers.empty() ? 0 : layers.back().weights.rows(); }
  std::size_t parameter_count() const noexcept;
  ModelSpec spec() const;

  bool operator==(const MLPModel&) const = default;
};

/// Throws std::invalid_argument if the layers do not chain, the final layer is
/// not an identity layer or fewer than two classes are produced.
void validate_spec(const ModelSpec& spec);

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MLPModel init_model(const ModelSpec& spec, std::uint64_t seed);

/// activations[0] is the input; activations[i + 1] is the output of layer i.
struct ForwardCache {
  std::vector<Vector> pre_activations;
  std::vector<Vector> activations;

  std::span<const double> logits() const noexcept { return activations.back(); }
};

ForwardCache forward(const MLPModel& model, std::span<const double> x);
Vector logits(const MLPModel& model, std::span<const double> x);

/// Max-subtracted softmax.
Vector softmax(std::span<const double> logits);
Vector log_softmax(std::span<const double> logits);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values) noexcept;
std::size_t predict(const MLPModel& model, std::span<const double> x);

/// Loss value together with its gradient w.r.t. the logits it was given.
struct LossGrad {
  double value = 0.0;
  Vector grad;
};

double cross_entropy(std::span<const double> logits, std::size_t label);
LossGrad cross_entropy_with_grad(std::span<const double> logits, std::size_t label);

/// Same layout as the model parameters.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Gradients zeros_like(const MLPModel& model);
  void scale(double factor) noexcept;
  void add(const Gradients& other);
};

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(logits).
void backward_accumulate(const MLPModel& model, const ForwardCache& cache,
                         std::span<const double> logit_grad, Gradients& grads);
Gradients backward(const MLPModel& model, const ForwardCache& cache,
                   std::span<const double> logit_grad);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_every = 10;
  std::uint64_t seed = 0;
  std::string weight_init = "uniform_fan_avg";

  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);

/// eta * decay^floor(epoch / decay_every), epochs counted from zero.
double learning_rate_at(const TrainConfig& config, std::size_t epoch) noexcept;

/// v <- mu * v - eta_t * g; w <- w + v.
void sgd_step(MLPModel& model, const Gradients& grads, Gradients& velocity,
              const TrainConfig& config, std::size_t epoch);

struct TrainingData {
  Matrix features;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Per-sample objective. `sample` indexes the training set so objectives can
/// consult per-sample side information (e.g. cached reference outputs).
using SampleObjective =
    std::function<LossGrad(std::size_t sample, std::span<const double> logits, std::size_t label)>;

SampleObjective cross_entropy_objective();

struct EpochStats {
  std::size_t epoch = 0;  // 1-based count of completed epochs
  double mean_loss = 0.0;
  double train_error = 0.0;
};

/// Fraction of samples whose prediction differs from the label.
double error_rate(const MLPModel& model, const TrainingData& data);

/// Epoch-at-a-time SGD driver. Mini-batch loss is averaged over the batch and
/// the per-epoch shuffle is a function of (seed, epoch) only.
class Trainer {
 public:
  Trainer(MLPModel model, const TrainingData& data, SampleObjective objective, TrainConfig config);

  EpochStats run_epoch();

  const MLPModel& model() const noexcept { return model_; }
  MLPModel release() && { return std::move(model_); }
  std::size_t epochs_done() const noexcept { return epoch_; }
  const TrainConfig& config() const noexcept { return config_; }

 private:
  MLPModel model_;
  const TrainingData* data_;
  SampleObjective objective_;
  TrainConfig config_;
  Gradients velocity_;
  std::size_t epoch_ = 0;
};

struct TrainResult {
  MLPModel model;
  std::vector<EpochStats> log;
};

using EpochHook = std::function<void(const EpochStats&, const MLPModel&)>;

TrainResult train(MLPModel model, const TrainingData& data, const SampleObjective& objective,
                  const TrainConfig& config, const EpochHook& on_epoch = {});

}  // namespace pct
