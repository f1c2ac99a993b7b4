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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "pct/harness.hpp"
#include "pct/io.hpp"

namespace fs = std::filesystem;

namespace pct {
namespace {

ExperimentConfig tiny(Method method) {
  ExperimentConfig c = default_config(method);
  c.dataset.num_classes = 4;
  c.dataset.input_dim = 5;
  c.dataset.samples_per_class = 40;
  c.scenario = preset_scenario(UpdateKind::kSameArchRetrain, 4);
  c.scenario.old_hidden = c.scenario.new_hidden = {8};
  c.train.epochs = 3;
  c.train.batch_size = 16;
  c.ensemble_size = 3;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::pair<std::string, std::string>> tree(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
  std::sort(files.begin(), files.end());
  return files;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pctlab_harness_test_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::kNoTreatment, Method::kNaive, Method::kFDKL, Method::kFDLM, Method::kEnsemble})
    EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_EQ(to_string(Method::kFDKL), "FD-KL");
  EXPECT_THROW(method_from_string("BCT"), std::invalid_argument);
}

TEST(Config, DefaultsAndMethodSettings) {
  const ExperimentConfig fd = default_config(Method::kFDLM);
  EXPECT_EQ(fd.pc.mode, PCMode::kFocal);
  EXPECT_TRUE(std::holds_alternative<LogitMatchDistance>(fd.pc.distance));
  EXPECT_EQ(fd.pc.lambda, 1.0);
  EXPECT_EQ(fd.pc.filter, (FilterSpec{1.0, 5.0}));
  EXPECT_EQ(fd.train.epochs, 30u);
  EXPECT_EQ(fd.train.momentum, 0.9);
  EXPECT_EQ(fd.train.batch_size, 64u);
  const ExperimentConfig kl = default_config(Method::kFDKL);
  ASSERT_TRUE(std::holds_alternative<KLDistance>(kl.pc.distance));
  EXPECT_EQ(std::get<KLDistance>(kl.pc.distance).tau, 100.0);
  EXPECT_EQ(default_config(Method::kNaive).pc.mode, PCMode::kNaive);
  EXPECT_EQ(default_config(Method::kEnsemble).pc.mode, PCMode::kNone);
  for (Method m : {Method::kNoTreatment, Method::kNaive, Method::kFDKL, Method::kFDLM, Method::kEnsemble})
    EXPECT_NO_THROW(validate(default_config(m)));
}

TEST(Config, ValidationErrors) {
  ExperimentConfig c = tiny(Method::kFDLM);
  c.pc.mode = PCMode::kNone;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = tiny(Method::kEnsemble);
  c.ensemble_size = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.ensemble_size = kMaxEnsembleSize + 1;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = tiny(Method::kNoTreatment);
  c.repetitions = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(Config, JsonRoundTrip) {
  for (Method m : {Method::kNoTreatment, Method::kNaive, Method::kFDKL, Method::kFDLM, Method::kEnsemble}) {
    ExperimentConfig c = tiny(m);
    c.name = "row";
    c.repetitions = 2;
    c.scenario = preset_scenario(UpdateKind::kClassGrowth, 4);
    EXPECT_EQ(experiment_config_from_json(to_json(c)), c) << to_string(m);
    EXPECT_EQ(experiment_config_from_json(Json::parse(to_json(c).dump())), c);
  }
}

TEST(Config, JsonDefaultsAndUnknownKeys) {
  const Json j = Json::parse(R"({"method": "FD-KL"})");
  EXPECT_EQ(experiment_config_from_json(j), default_config(Method::kFDKL));
  EXPECT_THROW(experiment_config_from_json(Json::parse(R"({"methd": "FD-KL"})")), std::exception);
  EXPECT_THROW(experiment_config_from_json(Json::parse(R"({"train": {"lr": 1}})")), std::exception);
}

TEST(Summary, Stats) {
  const Stat s = summarize({3.0, 1.0, 2.0, 10.0});
  EXPECT_EQ(s.median, 2.5);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 10.0);
  EXPECT_THROW(summarize({}), std::invalid_argument);
}

TEST(Run, SeriesAndFinalReport) {
  ExperimentConfig c = tiny(Method::kFDLM);
  c.repetitions = 2;
  const ExperimentResult r = run_experiment(c);
  ASSERT_EQ(r.runs.size(), 2u);
  EXPECT_EQ(r.summary.runs, 2u);
  EXPECT_EQ(r.summary.failed, 0u);
  for (const auto& run : r.runs) {
    ASSERT_TRUE(run.ok) << run.error;
    ASSERT_EQ(run.series.size(), 3u);
    for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(run.series[e].epoch, e + 1);
    EXPECT_EQ(run.series.back().er_val, run.final_report.er_new);
    EXPECT_EQ(run.series.back().nfr_val, run.final_report.nfr);
    EXPECT_EQ(run.series.back().nfr_train, run.final_train_report.nfr);
    EXPECT_EQ(flip_report(run.records), run.final_report);
    EXPECT_EQ(run.final_report.n, 4u * 8);
  }
  EXPECT_NE(r.runs[0].records, r.runs[1].records);
  EXPECT_EQ(r.runs[0].final_report.er_old, r.runs[1].final_report.er_old);
}

TEST(Run, Deterministic) {
  ExperimentConfig c = tiny(Method::kNaive);
  c.repetitions = 2;
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(a.runs[r].series, b.runs[r].series);
    EXPECT_EQ(a.runs[r].records, b.runs[r].records);
  }
}

TEST(Run, DivergenceFailsOnlyThatRepetition) {
  ExperimentConfig c = tiny(Method::kFDLM);
  c.train.learning_rate = 50.0;
  c.train.momentum = 0.0;
  c.pc.filter.beta = 1000.0;
  const auto r = run_experiment(c);
  EXPECT_EQ(r.summary.runs, 0u);
  EXPECT_EQ(r.summary.failed, 1u);
  EXPECT_FALSE(r.runs[0].ok);
  EXPECT_NE(r.runs[0].error.find("non-finite"), std::string::npos);
  EXPECT_TRUE(std::isnan(r.summary.nfr.median));
}

TEST(Run, EnsembleUncertaintyAndParams) {
  const ExperimentConfig c = tiny(Method::kEnsemble);
  const auto r = run_experiment(c);
  ASSERT_TRUE(r.runs[0].ok) << r.runs[0].error;
  EXPECT_EQ(r.runs[0].uncertainty.size(), r.runs[0].records.size());
  const std::size_t single = init_model(dense_spec(5, std::vector<std::size_t>{8}, 4), 0).parameter_count();
  EXPECT_EQ(r.summary.new_param_count, 3 * single);
  for (const auto& u : r.runs[0].uncertainty) {
    EXPECT_GE(u.predictive_entropy, 0.0);
    EXPECT_LE(u.predictive_entropy, std::log(4.0) + 1e-12);
  }
}

TEST(Run, ClassGrowthEvaluatesOldClassesOnly) {
  ExperimentConfig c = tiny(Method::kFDKL);
  c.scenario = preset_scenario(UpdateKind::kClassGrowth, 4);
  c.scenario.old_hidden = c.scenario.new_hidden = {8};
  const auto r = run_experiment(c);
  ASSERT_TRUE(r.runs[0].ok) << r.runs[0].error;
  EXPECT_EQ(r.runs[0].final_report.n, 2u * 8);
  for (const auto& rec : r.runs[0].records) {
    EXPECT_LT(rec.true_label, 2u);
    EXPECT_LT(rec.old_pred, 2u);
  }
}

TEST(Run, OtherScenariosComplete) {
  for (auto kind : {UpdateKind::kArchChange, UpdateKind::kSampleGrowth, UpdateKind::kTwoChanges,
                    UpdateKind::kFineTune}) {
    ExperimentConfig c = tiny(Method::kFDLM);
    c.scenario = preset_scenario(kind, 4);
    const auto r = run_experiment(c);
    EXPECT_TRUE(r.runs[0].ok) << to_string(kind) << ": " << r.runs[0].error;
  }
}

TEST(Compare, SharedOldModel) {
  std::vector<ExperimentConfig> cs;
  for (Method m : {Method::kNoTreatment, Method::kFDLM, Method::kEnsemble}) cs.push_back(tiny(m));
  cs[1].name = "focal";
  const Comparison cmp = compare_methods(cs);
  ASSERT_EQ(cmp.rows.size(), 3u);
  EXPECT_EQ(cmp.rows[0].method, "NoTreatment");
  EXPECT_EQ(cmp.rows[1].method, "focal");
  EXPECT_EQ(cmp.rows[2].method, "Ensemble");
  EXPECT_EQ(cmp.rows[0].er_old, cmp.rows[1].er_old);
  EXPECT_EQ(cmp.rows[2].params, 3 * cmp.rows[0].params);
  // Reusing the context gives the same rows as standalone runs.
  EXPECT_EQ(run_experiment(cs[1]).runs[0].records, cmp.results[1].runs[0].records);

  std::vector<ExperimentConfig> bad{tiny(Method::kNoTreatment), tiny(Method::kFDLM)};
  bad[1].train.seed = 9;
  EXPECT_THROW(compare_methods(bad), std::invalid_argument);
}

TEST(Sweep, ZeroFilterMatchesNoTreatment) {
  const ExperimentConfig c = tiny(Method::kFDLM);
  const std::vector<FilterSpec> grid{{0, 0}, {1, 5}};
  const FocalSweep s = sweep_focal(c, grid);
  ASSERT_EQ(s.rows.size(), 2u);
  const auto nt = run_experiment(tiny(Method::kNoTreatment));
  EXPECT_EQ(s.results[0].runs[0].records, nt.runs[0].records);
  EXPECT_EQ(s.rows[1].alpha, 1.0);
  EXPECT_EQ(s.rows[1].beta, 5.0);
  EXPECT_THROW(sweep_focal(tiny(Method::kNoTreatment), grid), std::invalid_argument);
}

TEST(Sweep, EnsembleRepetitions) {
  ExperimentConfig c = tiny(Method::kEnsemble);
  c.repetitions = 2;
  const std::vector<std::size_t> sizes{1, 2};
  const auto results = sweep_ensemble(c, sizes);
  ASSERT_EQ(results.size(), 2u);
  const SweepResult m = median_sweep(results);
  ASSERT_EQ(m.rows.size(), 2u);
  EXPECT_EQ(m.rows[0].nfr, 0.5 * (results[0].rows[0].nfr + results[1].rows[0].nfr));
}

TEST(Report, CsvLayoutAndByteStability) {
  ExperimentConfig c = tiny(Method::kEnsemble);
  c.repetitions = 2;
  const auto result = run_experiment(c);
  const fs::path a = scratch("a"), b = scratch("b");
  emit_report(result, a, ReportFormat::kCsv);
  emit_report(run_experiment(c), b, ReportFormat::kCsv);
  EXPECT_EQ(tree(a), tree(b));

  std::ifstream epochs(a / "rep_0" / "epochs.csv");
  std::string header;
  std::getline(epochs, header);
  EXPECT_EQ(header, "epoch,er_train,er_val,nfr_val,rel_nfr_val,nfr_train");
  std::size_t lines = 1;
  for (std::string line; std::getline(epochs, line);) ++lines;
  EXPECT_EQ(lines, c.train.epochs + 1);
  EXPECT_TRUE(fs::exists(a / "rep_1" / "flips.csv"));
  EXPECT_TRUE(fs::exists(a / "rep_0" / "uncertainty.csv"));
  EXPECT_TRUE(fs::exists(a / "summary.json"));

  const Json fin = read_json_file(a / "rep_0" / "final_report.json");
  EXPECT_EQ(flip_report_from_json(fin.at("test")), result.runs[0].final_report);
  EXPECT_EQ(flip_report_from_json(fin.at("train")), result.runs[0].final_train_report);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Report, JsonSeries) {
  const ExperimentConfig c = tiny(Method::kNoTreatment);
  const fs::path dir = scratch("json");
  emit_report(run_experiment(c), dir, ReportFormat::kJson);
  const Json series = read_json_file(dir / "rep_0" / "epochs.json");
  ASSERT_EQ(series.size(), c.train.epochs);
  EXPECT_EQ(series[0].at("epoch"), 1);
  fs::remove_all(dir);
}

TEST(Io, FormatNumber) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(std::optional<double>{}), "nan");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(Io, FlipReportJsonRoundTrip) {
  const std::vector<PredictionRecord> recs{{0, 0, 0, 1}, {1, 1, 1, 1}, {2, 2, 0, 2}, {3, 1, 0, 2}};
  const FlipReport r = flip_report(recs);
  EXPECT_EQ(flip_report_from_json(Json::parse(to_json(r).dump())), r);
}

}  // namespace
}  // namespace pct
