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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pct/nn.hpp"
#include "pct/rng.hpp"

namespace pct {
namespace {

MLPModel small_model(std::uint64_t seed) {
  const std::vector<std::size_t> hidden{6, 5};
  MLPModel m = init_model(dense_spec(4, hidden, 3), seed);
  CounterRng rng(seed, RngStream::kTest);
  for (auto& l : m.layers)
    for (auto& b : l.bias) b = rng.uniform(-0.3, 0.3);
  return m;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, RngStream::kTest, 1);
  Vector v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Nested-loop reference for the forward pass.
Vector naive_forward(const MLPModel& m, const Vector& x) {
  Vector a = x;
  for (const auto& l : m.layers) {
    Vector z(l.weights.rows(), 0.0);
    for (std::size_t i = 0; i < l.weights.rows(); ++i) {
      double s = l.bias[i];
      for (std::size_t j = 0; j < l.weights.cols(); ++j) s += l.weights(i, j) * a[j];
      z[i] = l.activation == Activation::kRelu ? std::max(0.0, s) : s;
    }
    a = z;
  }
  return a;
}

TEST(Spec, DenseSpecChains) {
  const std::vector<std::size_t> hidden{8};
  const ModelSpec s = dense_spec(4, hidden, 3);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (LayerSpec{4, 8, Activation::kRelu}));
  EXPECT_EQ(s[1], (LayerSpec{8, 3, Activation::kIdentity}));
  EXPECT_NO_THROW(validate_spec(s));
}

TEST(Spec, RejectsBadSpecs) {
  EXPECT_THROW(validate_spec({}), std::invalid_argument);
  EXPECT_THROW(validate_spec({{4, 8, Activation::kRelu}, {7, 3, Activation::kIdentity}}),
               std::invalid_argument);
  EXPECT_THROW(validate_spec({{4, 3, Activation::kRelu}}), std::invalid_argument);
  EXPECT_THROW(validate_spec({{4, 1, Activation::kIdentity}}), std::invalid_argument);
  EXPECT_THROW(init_model({{4, 8, Activation::kRelu}, {7, 3, Activation::kIdentity}}, 1),
               std::invalid_argument);
}

TEST(Init, Deterministic) {
  const std::vector<std::size_t> hidden{8};
  const auto spec = dense_spec(4, hidden, 3);
  EXPECT_EQ(init_model(spec, 7), init_model(spec, 7));
  EXPECT_NE(init_model(spec, 7), init_model(spec, 8));
}

TEST(Init, ZeroBiasAndBoundedWeights) {
  const std::vector<std::size_t> hidden{8};
  const MLPModel m = init_model(dense_spec(4, hidden, 3), 3);
  EXPECT_EQ(m.layers.back().bias, Vector(3, 0.0));
  for (const auto& l : m.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.weights.rows() + l.weights.cols()));
    for (double w : l.weights.data()) EXPECT_LE(std::abs(w), bound);
  }
  EXPECT_EQ(m.parameter_count(), 4u * 8 + 8 + 8 * 3 + 3);
  EXPECT_EQ(m.spec(), dense_spec(4, hidden, 3));
}

TEST(Forward, ZeroModelGivesZeroLogits) {
  const std::vector<std::size_t> hidden{5};
  MLPModel m = init_model(dense_spec(3, hidden, 4), 1);
  for (auto& l : m.layers) std::fill(l.weights.data().begin(), l.weights.data().end(), 0.0);
  EXPECT_EQ(logits(m, Vector{1.0, -2.0, 3.0}), Vector(4, 0.0));
}

TEST(Forward, IdentityLayerPassesInput) {
  MLPModel m;
  m.layers.push_back({Matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}), Vector(3, 0.0), Activation::kIdentity});
  const Vector x{0.5, -1.5, 2.0};
  EXPECT_EQ(logits(m, x), x);
}

TEST(Forward, MatchesNestedLoopOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MLPModel m = small_model(s);
    const Vector x = random_vector(4, s);
    const Vector got = logits(m, x);
    const Vector want = naive_forward(m, x);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
  }
}

TEST(Forward, RejectsWrongInputWidth) {
  EXPECT_THROW(logits(small_model(1), Vector{1.0, 2.0}), std::invalid_argument);
}

TEST(Softmax, Examples) {
  for (double p : softmax(Vector{0, 0, 0})) EXPECT_DOUBLE_EQ(p, 1.0 / 3);
  const Vector p = softmax(Vector{0, std::log(2.0)});
  EXPECT_NEAR(p[0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(p[1], 2.0 / 3, 1e-15);
  for (double q : softmax(Vector{1000, 1000, 1000})) EXPECT_DOUBLE_EQ(q, 1.0 / 3);
}

TEST(Softmax, ShiftInvariant) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Vector z = random_vector(6, s);
    Vector shifted = z;
    for (double& v : shifted) v += 37.5;
    const Vector a = softmax(z), b = softmax(shifted);
    const Vector la = log_softmax(z);
    for (std::size_t k = 0; k < z.size(); ++k) {
      EXPECT_NEAR(a[k], b[k], 1e-14);
      EXPECT_NEAR(std::exp(la[k]), a[k], 1e-14);
    }
  }
}

TEST(Argmax, ExamplesAndTies) {
  EXPECT_EQ(argmax(Vector{0.1, 0.9, 0.3}), 1u);
  EXPECT_EQ(argmax(Vector{0.5, 0.5}), 0u);
  EXPECT_EQ(argmax(Vector{-1.0, 2.0, 2.0}), 1u);
}

TEST(Argmax, PredictMatchesSoftmaxArgmax) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const MLPModel m = small_model(s);
    const Vector x = random_vector(4, s + 100);
    EXPECT_EQ(predict(m, x), argmax(softmax(logits(m, x))));
  }
}

TEST(CrossEntropy, Examples) {
  EXPECT_NEAR(cross_entropy(Vector{0, 0, 0, 0}, 2), std::log(4.0), 1e-15);
  EXPECT_LT(cross_entropy(Vector{0, 80, 0}, 1), 1e-30);
  EXPECT_THROW(cross_entropy(Vector{0, 0}, 2), std::out_of_range);
  EXPECT_THROW(cross_entropy_with_grad(Vector{0, 0}, 5), std::out_of_range);
}

TEST(CrossEntropy, MatchesSoftmaxComposition) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Vector z = random_vector(5, s);
    const std::size_t y = s % 5;
    const LossGrad lg = cross_entropy_with_grad(z, y);
    const Vector p = softmax(z);
    EXPECT_NEAR(lg.value, -std::log(p[y]), 1e-12);
    EXPECT_NEAR(cross_entropy(z, y), lg.value, 1e-15);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(lg.grad[k], p[k] - (k == y ? 1.0 : 0.0), 1e-14);
  }
}

TEST(Backward, ZeroLogitGradGivesZeroGradients) {
  const MLPModel m = small_model(3);
  const auto cache = forward(m, random_vector(4, 3));
  const Gradients g = backward(m, cache, Vector(3, 0.0));
  for (const auto& w : g.weights)
    for (double v : w.data()) EXPECT_EQ(v, 0.0);
  for (const auto& b : g.biases)
    for (double v : b) EXPECT_EQ(v, 0.0);
}

TEST(Backward, MatchesFiniteDifferences) {
  constexpr double h = 1e-5;
  for (std::uint64_t s = 0; s < 20; ++s) {
    MLPModel m = small_model(s);
    const Vector x = random_vector(4, s + 7);
    const std::size_t y = s % 3;
    const auto cache = forward(m, x);
    const Gradients g = backward(m, cache, cross_entropy_with_grad(cache.logits(), y).grad);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      auto check = [&](double& p, double analytic) {
        const double saved = p;
        p = saved + h;
        const double up = cross_entropy(logits(m, x), y);
        p = saved - h;
        const double down = cross_entropy(logits(m, x), y);
        p = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        EXPECT_LE(std::abs(numeric - analytic) / scale, 1e-4);
      };
      for (std::size_t i = 0; i < m.layers[l].weights.size(); ++i)
        check(m.layers[l].weights.data()[i], g.weights[l].data()[i]);
      for (std::size_t i = 0; i < m.layers[l].bias.size(); ++i) check(m.layers[l].bias[i], g.biases[l][i]);
    }
  }
}

TEST(Sgd, NoMomentumIsPlainDescent) {
  MLPModel m = small_model(4);
  const MLPModel before = m;
  Gradients g = Gradients::zeros_like(m);
  g.weights[0](1, 2) = 2.0;
  g.biases[1][0] = -1.0;
  Gradients v = Gradients::zeros_like(m);
  TrainConfig c;
  c.learning_rate = 0.1;
  c.momentum = 0.0;
  sgd_step(m, g, v, c, 0);
  EXPECT_DOUBLE_EQ(m.layers[0].weights(1, 2), before.layers[0].weights(1, 2) - 0.2);
  EXPECT_DOUBLE_EQ(m.layers[1].bias[0], before.layers[1].bias[0] + 0.1);
  EXPECT_EQ(m.layers[0].weights(0, 0), before.layers[0].weights(0, 0));
}

TEST(Sgd, ZeroGradientAndVelocityLeaveModel) {
  MLPModel m = small_model(5);
  const MLPModel before = m;
  Gradients v = Gradients::zeros_like(m);
  sgd_step(m, Gradients::zeros_like(m), v, TrainConfig{}, 3);
  EXPECT_EQ(m, before);
}

TEST(Sgd, MomentumAccumulates) {
  MLPModel m = small_model(6);
  const double w0 = m.layers[0].weights(0, 0);
  Gradients g = Gradients::zeros_like(m);
  g.weights[0](0, 0) = 1.0;
  Gradients v = Gradients::zeros_like(m);
  TrainConfig c;
  c.learning_rate = 0.1;
  c.momentum = 0.9;
  sgd_step(m, g, v, c, 0);
  sgd_step(m, g, v, c, 0);
  EXPECT_NEAR(m.layers[0].weights(0, 0), w0 - 0.1 - 0.19, 1e-15);
}

TEST(Schedule, StepDecay) {
  TrainConfig c;
  c.learning_rate = 0.1;
  c.lr_decay_factor = 0.1;
  c.lr_decay_every = 30;
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 0), 0.1);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 29), 0.1);
  EXPECT_NEAR(learning_rate_at(c, 30), 0.01, 1e-17);
  EXPECT_NEAR(learning_rate_at(c, 60), 0.001, 1e-18);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(validate(c));
  c.batch_size = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = TrainConfig{};
  c.learning_rate = -1;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = TrainConfig{};
  c.weight_init = "gaussian";
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TrainingData blobs(std::size_t per_class, std::uint64_t seed) {
  TrainingData d;
  d.num_classes = 2;
  d.features = Matrix(2 * per_class, 2);
  CounterRng rng(seed, RngStream::kTest, 9);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const std::size_t y = i % 2;
    d.features(i, 0) = (y == 0 ? -2.0 : 2.0) + 0.5 * rng.normal();
    d.features(i, 1) = 0.5 * rng.normal();
    d.labels.push_back(y);
  }
  return d;
}

TEST(Train, ZeroEpochsIsIdentity) {
  const auto data = blobs(20, 1);
  const std::vector<std::size_t> hidden{4};
  const MLPModel m = init_model(dense_spec(2, hidden, 2), 1);
  TrainConfig c;
  c.epochs = 0;
  const auto r = train(m, data, cross_entropy_objective(), c);
  EXPECT_EQ(r.model, m);
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, SeparableBlobsAreLearned) {
  const auto data = blobs(100, 2);
  const std::vector<std::size_t> hidden{8};
  TrainConfig c;
  c.learning_rate = 0.1;
  c.batch_size = 16;
  const auto r = train(init_model(dense_spec(2, hidden, 2), 3), data, cross_entropy_objective(), c);
  ASSERT_EQ(r.log.size(), c.epochs);
  EXPECT_LT(r.log.back().train_error, 0.05);
  EXPECT_LT(error_rate(r.model, data), 0.05);
  EXPECT_LT(r.log.back().mean_loss, r.log.front().mean_loss);
}

TEST(Train, Deterministic) {
  const auto data = blobs(50, 3);
  const std::vector<std::size_t> hidden{8};
  TrainConfig c;
  c.epochs = 5;
  c.seed = 11;
  const MLPModel init = init_model(dense_spec(2, hidden, 2), 4);
  const auto a = train(init, data, cross_entropy_objective(), c);
  const auto b = train(init, data, cross_entropy_objective(), c);
  EXPECT_EQ(a.model, b.model);
  c.seed = 12;
  EXPECT_NE(train(init, data, cross_entropy_objective(), c).model, a.model);
}

TEST(Train, EpochHookSeesEveryEpoch) {
  const auto data = blobs(20, 4);
  const std::vector<std::size_t> hidden{4};
  TrainConfig c;
  c.epochs = 3;
  std::vector<std::size_t> seen;
  train(init_model(dense_spec(2, hidden, 2), 1), data, cross_entropy_objective(), c,
        [&](const EpochStats& s, const MLPModel&) { seen.push_back(s.epoch); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(Train, NonFiniteLossIsReported) {
  const auto data = blobs(20, 5);
  const std::vector<std::size_t> hidden{4};
  TrainConfig c;
  c.epochs = 1;
  const SampleObjective bad = [](std::size_t, std::span<const double> z, std::size_t) {
    return LossGrad{std::nan(""), Vector(z.size(), 0.0)};
  };
  EXPECT_THROW(train(init_model(dense_spec(2, hidden, 2), 1), data, bad, c), std::runtime_error);
}

}  // namespace
}  // namespace pct
