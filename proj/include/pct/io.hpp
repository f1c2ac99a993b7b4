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

// JSON and CSV encodings. All output is byte-stable: numbers are written in
// shortest round-trip form and object keys in a fixed order.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "pct/ensemble.hpp"
#include "pct/flip_metrics.hpp"
#include "pct/harness.hpp"
#include "pct/scenarios.hpp"

namespace pct {

using Json = nlohmann::ordered_json;

enum class ReportFormat { kCsv, kJson };
ReportFormat report_format_from_string(const std::string& name);

/// Shortest decimal string that parses back to the same double.
std::string format_number(double value);
std::string format_number(const std::optional<double>& value);  // empty -> "nan"

Json to_json(const FlipReport& report);
FlipReport flip_report_from_json(const Json& j);

Json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const Json& j);
Json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& j);
Json to_json(const PCLossConfig& config);
PCLossConfig pc_config_from_json(const Json& j);
Json to_json(const UpdateScenario& scenario);
UpdateScenario scenario_from_json(const Json& j);

/// Missing sections take their defaults; unknown keys are rejected. The PC
/// mode and distance kind follow from the method when not given.
Json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const Json& j);

Json to_json(const Summary& summary);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

void write_dataset_csv(std::ostream& out, const Dataset& dataset);
void write_epoch_csv(std::ostream& out, std::span<const EpochRow> series);
Json epoch_series_json(std::span<const EpochRow> series);
void write_flips_csv(std::ostream& out, std::span<const PredictionRecord> records);
void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows);
Json comparison_json(std::span<const ComparisonRow> rows);
void write_focal_csv(std::ostream& out, std::span<const FocalSweepRow> rows);
void write_sweep_csv(std::ostream& out, const SweepResult& result);
void write_histogram_csv(std::ostream& out, const UncertaintyHistogram& histogram);

/// Writes one directory per repetition (epochs.{csv|json}, final_report.json,
/// flips.csv and, for ensembles, uncertainty.csv) plus summary.json.
void emit_report(const ExperimentResult& result, const std::filesystem::path& dir, ReportFormat format);

}  // namespace pct
