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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pct/matrix.hpp"

namespace pct {

struct PredictionRecord {
  std::size_t sample_id = 0;
  std::size_t true_label = 0;
  std::size_t old_pred = 0;
  std::size_t new_pred = 0;

  bool operator==(const PredictionRecord&) const = default;
};

enum class FlipQuadrant { kBothCorrect = 0, kNegativeFlip = 1, kPositiveFlip = 2, kBothWrong = 3 };

std::string to_string(FlipQuadrant quadrant);

/// Raised when a ratio metric has a zero denominator.
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct QuadrantCounts {
  std::size_t both_correct = 0;
  std::size_t negative_flip = 0;
  std::size_t positive_flip = 0;
  std::size_t both_wrong = 0;

  std::size_t total() const noexcept { return both_correct + negative_flip + positive_flip + both_wrong; }
  bool operator==(const QuadrantCounts&) const = default;
};

/// Aggregate flip statistics. Fractions are derived from the integer counts;
/// rel_nfr is empty when undefined (er_new == 0 or er_old == 1).
struct FlipReport {
  std::size_t n = 0;
  QuadrantCounts counts;
  double er_old = 0.0;
  double er_new = 0.0;
  double nfr = 0.0;
  double pfr = 0.0;
  std::optional<double> rel_nfr;

  bool operator==(const FlipReport&) const = default;
};

FlipQuadrant classify_flip(const PredictionRecord& record) noexcept;

QuadrantCounts count_quadrants(std::span<const PredictionRecord> records);

double compute_nfr(std::span<const PredictionRecord> records);

/// nfr / ((1 - er_old) * er_new).
double compute_relative_nfr(double nfr, double er_old, double er_new);

FlipReport flip_report(std::span<const PredictionRecord> records);

/// Builds a report directly from counts (used for JSON round trips).
FlipReport flip_report_from_counts(const QuadrantCounts& counts);

struct UncertaintyRecord {
  std::size_t sample_id = 0;
  double predictive_entropy = 0.0;
};

/// Shannon entropy (nats) of the member-averaged probability vector.
double predictive_entropy(std::span<const Vector> member_probabilities);

/// `bins` equal-width edges over [0, ln K].
std::vector<double> entropy_bin_edges(std::size_t num_classes, std::size_t bins = 20);

struct UncertaintyHistogram {
  std::vector<double> edges;
  std::vector<std::size_t> flip_counts;
  std::vector<std::size_t> other_counts;
};

/// Histograms of negative-flip and remaining samples by uncertainty. Values
/// outside the edge range fall into the nearest end bin; the last bin is
/// closed on the right.
UncertaintyHistogram nfr_by_uncertainty_bin(std::span<const PredictionRecord> records,
                                            std::span<const UncertaintyRecord> uncertainties,
                                            std::span<const double> bin_edges);

}  // namespace pct
