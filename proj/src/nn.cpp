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

#include "pct/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pct/rng.hpp"

namespace pct {

std::string to_string(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

ModelSpec dense_spec(std::size_t input_dim, std::span<const std::size_t> hidden,
                     std::size_t num_classes) {
  ModelSpec spec;
  std::size_t in = input_dim;
  for (std::size_t width : hidden) {
    spec.push_back({in, width, Activation::kRelu});
    in = width;
  }
  spec.push_back({in, num_classes, Activation::kIdentity});
  return spec;
}

std::size_t MLPModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

ModelSpec MLPModel::spec() const {
  ModelSpec spec;
  for (const auto& layer : layers) {
    spec.push_back({layer.weights.cols(), layer.weights.rows(), layer.activation});
  }
  return spec;
}

void validate_spec(const ModelSpec& spec) {
  if (spec.empty()) throw std::invalid_argument("model spec has no layers");
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i].inputs == 0 || spec[i].outputs == 0) {
      throw std::invalid_argument("layer " + std::to_string(i) + " has a zero dimension");
    }
    if (i + 1 < spec.size() && spec[i].outputs != spec[i + 1].inputs) {
      throw std::invalid_argument("layer " + std::to_string(i) + " output dim " +
                                  std::to_string(spec[i].outputs) + " does not chain into layer " +
                                  std::to_string(i + 1) + " input dim " +
                                  std::to_string(spec[i + 1].inputs));
    }
  }
  if (spec.back().activation != Activation::kIdentity) {
    throw std::invalid_argument("final layer must emit raw logits (identity activation)");
  }
  if (spec.back().outputs < 2) throw std::invalid_argument("need at least two classes");
}

MLPModel init_model(const ModelSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  MLPModel model;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& ls = spec[i];
    CounterRng rng(seed, RngStream::kInit, i);
    const double limit = std::sqrt(6.0 / static_cast<double>(ls.inputs + ls.outputs));
    DenseLayer layer{Matrix(ls.outputs, ls.inputs), Vector(ls.outputs, 0.0), ls.activation};
    for (double& w : layer.weights.data()) w = rng.uniform(-limit, limit);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

ForwardCache forward(const MLPModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw std::invalid_argument("input length " + std::to_string(x.size()) +
                                " != model input dim " + std::to_string(model.input_dim()));
  }
  ForwardCache cache;
  cache.pre_activations.reserve(model.layers.size());
  cache.activations.reserve(model.layers.size() + 1);
  cache.activations.emplace_back(x.begin(), x.end());
  for (const auto& layer : model.layers) {
    const Vector& in = cache.activations.back();
    Vector z(layer.bias);
    for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
      const auto w = layer.weights.row(r);
      double acc = 0.0;
      for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * in[c];
      z[r] += acc;
    }
    Vector a = z;
    if (layer.activation == Activation::kRelu) {
      for (double& v : a) v = v > 0.0 ? v : 0.0;
    }
    cache.pre_activations.push_back(std::move(z));
    cache.activations.push_back(std::move(a));
  }
  return cache;
}

Vector logits(const MLPModel& model, std::span<const double> x) {
  auto cache = forward(model, x);
  return std::move(cache.activations.back());
}

Vector softmax(std::span<const double> logits) {
  Vector p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

Vector log_softmax(std::span<const double> logits) {
  Vector out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double m = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double v : out) sum += std::exp(v - m);
  const double log_norm = m + std::log(sum);
  for (double& v : out) v -= log_norm;
  return out;
}

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t predict(const MLPModel& model, std::span<const double> x) {
  return argmax(logits(model, x));
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw std::out_of_range("label " + std::to_string(label) + " outside [0, " +
                            std::to_string(logits.size()) + ")");
  }
  return -log_softmax(logits)[label];
}

LossGrad cross_entropy_with_grad(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw std::out_of_range("label " + std::to_string(label) + " outside [0, " +
                            std::to_string(logits.size()) + ")");
  }
  const Vector logp = log_softmax(logits);
  LossGrad out{-logp[label], Vector(logits.size())};
  for (std::size_t k = 0; k < logits.size(); ++k) out.grad[k] = std::exp(logp[k]);
  out.grad[label] -= 1.0;
  return out;
}

Gradients Gradients::zeros_like(const MLPModel& model) {
  Gradients g;
  for (const auto& layer : model.layers) {
    g.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
    g.biases.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

void Gradients::scale(double factor) noexcept {
  for (auto& w : weights)
    for (double& v : w.data()) v *= factor;
  for (auto& b : biases)
    for (double& v : b) v *= factor;
}

void Gradients::add(const Gradients& other) {
  if (other.weights.size() != weights.size()) throw std::invalid_argument("gradient layout mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto dst = weights[l].data();
    auto src = other.weights[l].data();
    if (dst.size() != src.size()) throw std::invalid_argument("gradient layout mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
}

void backward_accumulate(const MLPModel& model, const ForwardCache& cache,
                         std::span<const double> logit_grad, Gradients& grads) {
  const std::size_t depth = model.layers.size();
  if (cache.activations.size() != depth + 1 || cache.pre_activations.size() != depth) {
    throw std::invalid_argument("forward cache does not match model depth");
  }
  if (logit_grad.size() != model.num_classes()) {
    throw std::invalid_argument("logit gradient length " + std::to_string(logit_grad.size()) +
                                " != " + std::to_string(model.num_classes()));
  }
  if (grads.weights.size() != depth) throw std::invalid_argument("gradient layout mismatch");

  Vector delta(logit_grad.begin(), logit_grad.end());
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = model.layers[l];
    if (layer.activation == Activation::kRelu) {
      const Vector& z = cache.pre_activations[l];
      for (std::size_t r = 0; r < delta.size(); ++r) {
        if (!(z[r] > 0.0)) delta[r] = 0.0;
      }
    }
    const Vector& in = cache.activations[l];
    Matrix& gw = grads.weights[l];
    Vector& gb = grads.biases[l];
    for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
      const double d = delta[r];
      gb[r] += d;
      if (d == 0.0) continue;
      auto row = gw.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += d * in[c];
    }
    if (l == 0) break;
    Vector prev(layer.weights.cols(), 0.0);
    for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const auto w = layer.weights.row(r);
      for (std::size_t c = 0; c < w.size(); ++c) prev[c] += d * w[c];
    }
    delta = std::move(prev);
  }
}

Gradients backward(const MLPModel& model, const ForwardCache& cache,
                   std::span<const double> logit_grad) {
  Gradients g = Gradients::zeros_like(model);
  backward_accumulate(model, cache, logit_grad, g);
  return g;
}

void validate(const TrainConfig& config) {
  if (!(config.learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(config.lr_decay_factor > 0.0 && config.lr_decay_factor <= 1.0)) {
    throw std::invalid_argument("lr_decay_factor must lie in (0, 1]");
  }
  if (config.lr_decay_every == 0) throw std::invalid_argument("lr_decay_every must be >= 1");
  if (config.weight_init != "uniform_fan_avg") {
    throw std::invalid_argument("unsupported weight_init '" + config.weight_init + "'");
  }
}

double learning_rate_at(const TrainConfig& config, std::size_t epoch) noexcept {
  const auto steps = static_cast<double>(epoch / config.lr_decay_every);
  return config.learning_rate * std::pow(config.lr_decay_factor, steps);
}

void sgd_step(MLPModel& model, const Gradients& grads, Gradients& velocity,
              const TrainConfig& config, std::size_t epoch) {
  if (grads.weights.size() != model.layers.size() || velocity.weights.size() != model.layers.size()) {
    throw std::invalid_argument("gradient layout mismatch");
  }
  const double eta = learning_rate_at(config, epoch);
  const double mu = config.momentum;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto w = model.layers[l].weights.data();
    auto g = grads.weights[l].data();
    auto v = velocity.weights[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = mu * v[i] - eta * g[i];
      w[i] += v[i];
    }
    auto& b = model.layers[l].bias;
    const auto& gb = grads.biases[l];
    auto& vb = velocity.biases[l];
    for (std::size_t i = 0; i < b.size(); ++i) {
      vb[i] = mu * vb[i] - eta * gb[i];
      b[i] += vb[i];
    }
  }
}

SampleObjective cross_entropy_objective() {
  return [](std::size_t, std::span<const double> logits, std::size_t label) {
    return cross_entropy_with_grad(logits, label);
  };
}

double error_rate(const MLPModel& model, const TrainingData& data) {
  if (data.size() == 0) throw std::invalid_argument("error rate of an empty dataset");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(model, data.features.row(i)) != data.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

Trainer::Trainer(MLPModel model, const TrainingData& data, SampleObjective objective,
                 TrainConfig config)
    : model_(std::move(model)),
      data_(&data),
      objective_(std::move(objective)),
      config_(std::move(config)),
      velocity_(Gradients::zeros_like(model_)) {
  validate(config_);
  if (data.size() == 0) throw std::invalid_argument("training set is empty");
  if (data.features.rows() != data.size()) throw std::invalid_argument("features/labels length mismatch");
  if (data.features.cols() != model_.input_dim()) {
    throw std::invalid_argument("training features have " + std::to_string(data.features.cols()) +
                                " columns, model expects " + std::to_string(model_.input_dim()));
  }
}

EpochStats Trainer::run_epoch() {
  const TrainingData& data = *data_;
  const auto order = random_permutation(data.size(), CounterRng(config_.seed, RngStream::kShuffle, epoch_));
  Gradients grads = Gradients::zeros_like(model_);
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const std::size_t stop = std::min(order.size(), start + config_.batch_size);
    for (auto& w : grads.weights) std::fill(w.data().begin(), w.data().end(), 0.0);
    for (auto& b : grads.biases) std::fill(b.begin(), b.end(), 0.0);
    for (std::size_t k = start; k < stop; ++k) {
      const std::size_t i = order[k];
      const ForwardCache cache = forward(model_, data.features.row(i));
      const LossGrad lg = objective_(i, cache.logits(), data.labels[i]);
      if (!std::isfinite(lg.value)) {
        throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch_ + 1));
      }
      loss_sum += lg.value;
      backward_accumulate(model_, cache, lg.grad, grads);
    }
    grads.scale(1.0 / static_cast<double>(stop - start));
    sgd_step(model_, grads, velocity_, config_, epoch_);
  }
  ++epoch_;
  return {epoch_, loss_sum / static_cast<double>(data.size()), error_rate(model_, data)};
}

TrainResult train(MLPModel model, const TrainingData& data, const SampleObjective& objective,
                  const TrainConfig& config, const EpochHook& on_epoch) {
  TrainResult result;
  if (config.epochs == 0) {
    result.model = std::move(model);
    return result;
  }
  Trainer trainer(std::move(model), data, objective, config);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    result.log.push_back(trainer.run_epoch());
    if (on_epoch) on_epoch(result.log.back(), trainer.model());
  }
  result.model = std::move(trainer).release();
  return result;
}

}  // namespace pct
