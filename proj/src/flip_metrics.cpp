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

#include "pct/flip_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace pct {

std::string to_string(FlipQuadrant quadrant) {
  switch (quadrant) {
    case FlipQuadrant::kBothCorrect: return "both_correct";
    case FlipQuadrant::kNegativeFlip: return "negative_flip";
    case FlipQuadrant::kPositiveFlip: return "positive_flip";
    case FlipQuadrant::kBothWrong: return "both_wrong";
  }
  return "both_wrong";
}

FlipQuadrant classify_flip(const PredictionRecord& record) noexcept {
  const bool old_ok = record.old_pred == record.true_label;
  const bool new_ok = record.new_pred == record.true_label;
  if (old_ok) return new_ok ? FlipQuadrant::kBothCorrect : FlipQuadrant::kNegativeFlip;
  return new_ok ? FlipQuadrant::kPositiveFlip : FlipQuadrant::kBothWrong;
}

QuadrantCounts count_quadrants(std::span<const PredictionRecord> records) {
  QuadrantCounts c;
  for (const auto& r : records) {
    switch (classify_flip(r)) {
      case FlipQuadrant::kBothCorrect: ++c.both_correct; break;
      case FlipQuadrant::kNegativeFlip: ++c.negative_flip; break;
      case FlipQuadrant::kPositiveFlip: ++c.positive_flip; break;
      case FlipQuadrant::kBothWrong: ++c.both_wrong; break;
    }
  }
  return c;
}

double compute_nfr(std::span<const PredictionRecord> records) {
  if (records.empty()) throw std::invalid_argument("NFR of an empty record set");
  const auto c = count_quadrants(records);
  return static_cast<double>(c.negative_flip) / static_cast<double>(records.size());
}

double compute_relative_nfr(double nfr, double er_old, double er_new) {
  if (!(er_new > 0.0) || !(er_old < 1.0)) {
    throw UndefinedMetricError("relative NFR undefined for er_old=" + std::to_string(er_old) +
                               ", er_new=" + std::to_string(er_new));
  }
  return nfr / ((1.0 - er_old) * er_new);
}

FlipReport flip_report_from_counts(const QuadrantCounts& counts) {
  const std::size_t n = counts.total();
  if (n == 0) throw std::invalid_argument("flip report of an empty record set");
  const auto frac = [n](std::size_t k) { return static_cast<double>(k) / static_cast<double>(n); };
  FlipReport r;
  r.n = n;
  r.counts = counts;
  const std::size_t old_wrong = counts.positive_flip + counts.both_wrong;
  const std::size_t new_wrong = counts.negative_flip + counts.both_wrong;
  r.er_old = frac(old_wrong);
  r.er_new = frac(new_wrong);
  r.nfr = frac(counts.negative_flip);
  r.pfr = frac(counts.positive_flip);
  if (new_wrong > 0 && old_wrong < n) {
    // Computed from counts: nf * n / ((n - old_wrong) * new_wrong).
    r.rel_nfr = static_cast<double>(counts.negative_flip) * static_cast<double>(n) /
                (static_cast<double>(n - old_wrong) * static_cast<double>(new_wrong));
  }
  return r;
}

FlipReport flip_report(std::span<const PredictionRecord> records) {
  if (records.empty()) throw std::invalid_argument("flip report of an empty record set");
  return flip_report_from_counts(count_quadrants(records));
}

double predictive_entropy(std::span<const Vector> member_probabilities) {
  if (member_probabilities.empty()) throw std::invalid_argument("no ensemble members");
  const std::size_t k = member_probabilities.front().size();
  Vector mean(k, 0.0);
  for (const auto& p : member_probabilities) {
    if (p.size() != k) throw std::invalid_argument("members disagree on class count");
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || v > 1.0) throw std::invalid_argument("probability outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("probability vector does not sum to 1");
    for (std::size_t j = 0; j < k; ++j) mean[j] += p[j];
  }
  double h = 0.0;
  for (double& v : mean) {
    v /= static_cast<double>(member_probabilities.size());
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::max(h, 0.0);
}

std::vector<double> entropy_bin_edges(std::size_t num_classes, std::size_t bins) {
  if (num_classes < 2 || bins == 0) throw std::invalid_argument("need K >= 2 and at least one bin");
  const double top = std::log(static_cast<double>(num_classes));
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = top * static_cast<double>(i) / static_cast<double>(bins);
  }
  return edges;
}

UncertaintyHistogram nfr_by_uncertainty_bin(std::span<const PredictionRecord> records,
                                            std::span<const UncertaintyRecord> uncertainties,
                                            std::span<const double> bin_edges) {
  if (records.size() != uncertainties.size()) {
    throw std::invalid_argument("records and uncertainties differ in length");
  }
  if (bin_edges.size() < 2) throw std::invalid_argument("need at least two bin edges");
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) throw std::invalid_argument("bin edges must increase");
  }
  const std::size_t bins = bin_edges.size() - 1;
  UncertaintyHistogram h{std::vector<double>(bin_edges.begin(), bin_edges.end()),
                         std::vector<std::size_t>(bins, 0), std::vector<std::size_t>(bins, 0)};
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].sample_id != uncertainties[i].sample_id) {
      throw std::invalid_argument("sample id mismatch at position " + std::to_string(i));
    }
    const double u = uncertainties[i].predictive_entropy;
    const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), u);
    std::size_t bin = it == bin_edges.begin() ? 0 : static_cast<std::size_t>(it - bin_edges.begin()) - 1;
    bin = std::min(bin, bins - 1);
    if (classify_flip(records[i]) == FlipQuadrant::kNegativeFlip) {
      ++h.flip_counts[bin];
    } else {
      ++h.other_counts[bin];
    }
  }
  return h;
}

}  // namespace pct
