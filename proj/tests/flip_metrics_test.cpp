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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pct/flip_metrics.hpp"
#include "pct/rng.hpp"

namespace pct {
namespace {

std::vector<PredictionRecord> hand_set() {
  // y=(0,1,2,0), old=(0,1,0,0), new=(0,2,0,1)
  return {{0, 0, 0, 0}, {1, 1, 1, 2}, {2, 2, 0, 0}, {3, 0, 0, 1}};
}

std::vector<PredictionRecord> random_set(std::uint64_t seed) {
  CounterRng rng(seed, RngStream::kTest, 21);
  const std::size_t n = 1 + rng.index(300);
  const std::size_t k = 2 + rng.index(6);
  std::vector<PredictionRecord> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = {i, rng.index(k), rng.index(k), rng.index(k)};
  return r;
}

TEST(Classify, TruthTable) {
  EXPECT_EQ(classify_flip({0, 2, 2, 5}), FlipQuadrant::kNegativeFlip);
  EXPECT_EQ(classify_flip({0, 2, 1, 2}), FlipQuadrant::kPositiveFlip);
  EXPECT_EQ(classify_flip({0, 2, 2, 2}), FlipQuadrant::kBothCorrect);
  EXPECT_EQ(classify_flip({0, 2, 1, 3}), FlipQuadrant::kBothWrong);
  EXPECT_EQ(to_string(FlipQuadrant::kNegativeFlip), "negative_flip");
}

TEST(Nfr, Examples) {
  EXPECT_DOUBLE_EQ(compute_nfr(hand_set()), 0.5);
  auto same = random_set(1);
  for (auto& r : same) r.new_pred = r.old_pred;
  EXPECT_EQ(compute_nfr(same), 0.0);
  auto all_wrong = random_set(2);
  for (auto& r : all_wrong) r.old_pred = r.true_label + 1;
  EXPECT_EQ(compute_nfr(all_wrong), 0.0);
  EXPECT_THROW(compute_nfr({}), std::invalid_argument);
}

TEST(RelativeNfr, PublishedRows) {
  EXPECT_NEAR(compute_relative_nfr(0.0644, 0.3024, 0.3029), 0.3048, 5e-5);
  EXPECT_NEAR(compute_relative_nfr(0.0235, 0.3024, 0.3047), 0.1106, 5e-5);
  EXPECT_NEAR(compute_relative_nfr(0.0170, 0.2607, 0.2598), 0.0885, 5e-5);
}

TEST(RelativeNfr, Undefined) {
  EXPECT_THROW(compute_relative_nfr(0.0, 0.2, 0.0), UndefinedMetricError);
  EXPECT_THROW(compute_relative_nfr(0.0, 1.0, 0.3), UndefinedMetricError);
}

TEST(Report, HandSet) {
  const FlipReport r = flip_report(hand_set());
  EXPECT_EQ(r.n, 4u);
  EXPECT_DOUBLE_EQ(r.er_old, 0.25);
  EXPECT_DOUBLE_EQ(r.er_new, 0.75);
  EXPECT_DOUBLE_EQ(r.nfr, 0.5);
  EXPECT_DOUBLE_EQ(r.pfr, 0.0);
  ASSERT_TRUE(r.rel_nfr);
  EXPECT_DOUBLE_EQ(*r.rel_nfr, 0.5 / (0.75 * 0.75));
  EXPECT_EQ(r.counts, (QuadrantCounts{1, 2, 0, 1}));
}

TEST(Report, AllBothCorrect) {
  const std::vector<PredictionRecord> recs{{0, 1, 1, 1}, {1, 0, 0, 0}};
  const FlipReport r = flip_report(recs);
  EXPECT_EQ(r.er_old, 0.0);
  EXPECT_EQ(r.er_new, 0.0);
  EXPECT_EQ(r.nfr, 0.0);
  EXPECT_EQ(r.pfr, 0.0);
  EXPECT_FALSE(r.rel_nfr);
  EXPECT_THROW(flip_report({}), std::invalid_argument);
}

TEST(Report, IdentityPartitionAndBounds) {
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto recs = random_set(s);
    const FlipReport r = flip_report(recs);
    EXPECT_EQ(r.counts.total(), recs.size());
    EXPECT_EQ(r.counts, count_quadrants(recs));
    const long lhs = static_cast<long>(r.counts.negative_flip + r.counts.both_wrong) -
                     static_cast<long>(r.counts.positive_flip + r.counts.both_wrong);
    EXPECT_EQ(lhs, static_cast<long>(r.counts.negative_flip) - static_cast<long>(r.counts.positive_flip));
    EXPECT_NEAR(r.er_new - r.er_old, r.nfr - r.pfr, 1e-15);
    EXPECT_LE(r.nfr, std::min(r.er_new, 1.0 - r.er_old) + 1e-15);
    EXPECT_LE(r.pfr, std::min(r.er_old, 1.0 - r.er_new) + 1e-15);
    EXPECT_EQ(flip_report_from_counts(r.counts), r);
  }
}

TEST(Entropy, Examples) {
  EXPECT_EQ(predictive_entropy(std::vector<Vector>{{0, 1, 0}, {0, 1, 0}}), 0.0);
  EXPECT_NEAR(predictive_entropy(std::vector<Vector>{Vector(10, 0.1)}), std::log(10.0), 1e-12);
  EXPECT_NEAR(predictive_entropy(std::vector<Vector>{{1, 0}, {0, 1}}), std::log(2.0), 1e-15);
  EXPECT_THROW(predictive_entropy(std::vector<Vector>{{0.5, 0.6}}), std::invalid_argument);
  EXPECT_THROW(predictive_entropy(std::vector<Vector>{{1.5, -0.5}}), std::invalid_argument);
  EXPECT_THROW(predictive_entropy(std::vector<Vector>{{1, 0}, {0, 0, 1}}), std::invalid_argument);
  EXPECT_THROW(predictive_entropy(std::vector<Vector>{}), std::invalid_argument);
}

TEST(Entropy, Bounded) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    CounterRng rng(s, RngStream::kTest, 22);
    const std::size_t k = 2 + rng.index(8);
    std::vector<Vector> members(1 + rng.index(5), Vector(k));
    for (auto& m : members) {
      double sum = 0.0;
      for (auto& p : m) sum += (p = rng.uniform());
      for (auto& p : m) p /= sum;
    }
    const double h = predictive_entropy(members);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(k)) + 1e-12);
  }
}

TEST(Histogram, EdgesSpanZeroToLogK) {
  const auto e = entropy_bin_edges(10, 20);
  ASSERT_EQ(e.size(), 21u);
  EXPECT_EQ(e.front(), 0.0);
  EXPECT_NEAR(e.back(), std::log(10.0), 1e-15);
  EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
}

TEST(Histogram, SingleFlipAndPartition) {
  const std::vector<double> edges{0.0, 0.5, 1.0, 1.5};
  const std::vector<PredictionRecord> recs{{0, 0, 0, 1}, {1, 0, 0, 0}, {2, 1, 0, 0}, {3, 1, 1, 1}};
  const std::vector<UncertaintyRecord> unc{{0, 0.7}, {1, 0.1}, {2, 1.5}, {3, 9.0}};
  const auto h = nfr_by_uncertainty_bin(recs, unc, edges);
  EXPECT_EQ(h.flip_counts, (std::vector<std::size_t>{0, 1, 0}));
  EXPECT_EQ(h.other_counts, (std::vector<std::size_t>{1, 0, 2}));
  const auto total = std::accumulate(h.flip_counts.begin(), h.flip_counts.end(), std::size_t{0}) +
                     std::accumulate(h.other_counts.begin(), h.other_counts.end(), std::size_t{0});
  EXPECT_EQ(total, recs.size());
}

TEST(Histogram, NoFlipsGivesZeroFlipHistogram) {
  const std::vector<PredictionRecord> recs{{0, 0, 0, 0}, {1, 1, 0, 1}};
  const std::vector<UncertaintyRecord> unc{{0, 0.2}, {1, 0.4}};
  const auto h = nfr_by_uncertainty_bin(recs, unc, entropy_bin_edges(2, 4));
  EXPECT_EQ(h.flip_counts, std::vector<std::size_t>(4, 0));
}

TEST(Histogram, Errors) {
  const std::vector<PredictionRecord> recs{{0, 0, 0, 0}};
  const std::vector<UncertaintyRecord> other_id{{5, 0.2}};
  EXPECT_THROW(nfr_by_uncertainty_bin(recs, other_id, entropy_bin_edges(2)), std::invalid_argument);
  const std::vector<UncertaintyRecord> ok{{0, 0.2}};
  EXPECT_THROW(nfr_by_uncertainty_bin(recs, ok, std::vector<double>{1.0, 0.5}), std::invalid_argument);
}

}  // namespace
}  // namespace pct
