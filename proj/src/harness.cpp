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

#include "pct/harness.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace pct {

namespace {

constexpr std::uint64_t kOldEnsembleOffset = 100000;
constexpr std::uint64_t kNewEnsembleOffset = 200000;
constexpr std::uint64_t kSweepOffset = 300000;

bool same_protocol(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.scenario == b.scenario && a.dataset == b.dataset && a.train == b.train;
}

std::vector<std::size_t> original_predictions(const MLPModel& model, const Dataset& dataset,
                                              std::span<const std::size_t> indices,
                                              std::span<const std::size_t> to_original) {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(to_original[predict(model, dataset.features.row(i))]);
  return out;
}

std::vector<std::size_t> original_predictions(const Ensemble& ensemble, const Dataset& dataset,
                                              std::span<const std::size_t> indices,
                                              std::span<const std::size_t> to_original) {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(to_original[ensemble_predict(ensemble, dataset.features.row(i))]);
  return out;
}

std::vector<PredictionRecord> make_records(const Dataset& dataset, std::span<const std::size_t> indices,
                                           std::span<const std::size_t> old_pred,
                                           std::span<const std::size_t> new_pred) {
  std::vector<PredictionRecord> records;
  records.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    records.push_back({indices[r], dataset.labels[indices[r]], old_pred[r], new_pred[r]});
  }
  return records;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::kNoTreatment: return "NoTreatment";
    case Method::kNaive: return "Naive";
    case Method::kFDKL: return "FD-KL";
    case Method::kFDLM: return "FD-LM";
    case Method::kEnsemble: return "Ensemble";
  }
  return "NoTreatment";
}

Method method_from_string(const std::string& name) {
  for (auto m : {Method::kNoTreatment, Method::kNaive, Method::kFDKL, Method::kFDLM, Method::kEnsemble}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

void apply_method(ExperimentConfig& config, Method method) {
  config.method = method;
  const double tau = std::holds_alternative<KLDistance>(config.pc.distance)
                         ? std::get<KLDistance>(config.pc.distance).tau
                         : KLDistance{}.tau;
  switch (method) {
    case Method::kNoTreatment:
    case Method::kEnsemble:
      config.pc.mode = PCMode::kNone;
      break;
    case Method::kNaive:
      config.pc.mode = PCMode::kNaive;
      break;
    case Method::kFDKL:
      config.pc.mode = PCMode::kFocal;
      config.pc.distance = KLDistance{tau};
      break;
    case Method::kFDLM:
      config.pc.mode = PCMode::kFocal;
      config.pc.distance = LogitMatchDistance{};
      break;
  }
}

ExperimentConfig default_config(Method method) {
  ExperimentConfig c;
  c.scenario = preset_scenario(UpdateKind::kSameArchRetrain, c.dataset.num_classes);
  c.train = TrainConfig{};
  c.pc = PCLossConfig{};
  apply_method(c, method);
  return c;
}

void validate(const ExperimentConfig& config) {
  validate(config.dataset);
  validate(config.scenario, config.dataset.num_classes);
  validate(config.train);
  validate(config.pc);
  if (config.repetitions == 0) throw std::invalid_argument("repetitions must be >= 1");
  if (config.method == Method::kEnsemble && (config.ensemble_size == 0 || config.ensemble_size > kMaxEnsembleSize)) {
    throw std::invalid_argument("ensemble_size must lie in [1, " + std::to_string(kMaxEnsembleSize) + "]");
  }
  ExperimentConfig expected = config;
  apply_method(expected, config.method);
  if (expected.pc.mode != config.pc.mode ||
      (config.pc.mode == PCMode::kFocal && expected.pc.distance.index() != config.pc.distance.index())) {
    throw std::invalid_argument("pc settings (mode " + to_string(config.pc.mode) +
                                ") are inconsistent with method " + to_string(config.method));
  }
}

Stat summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("no values to summarize");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return {median, values.front(), values.back()};
}

ExperimentContext ExperimentContext::prepare(const ExperimentConfig& config, std::size_t ensemble_size) {
  validate(config);
  ExperimentContext ctx;
  ctx.config_ = config;
  ctx.dataset_ = generate(config.dataset);
  ctx.build_ = build_scenario(config.scenario, ctx.dataset_, SeedPolicy{config.train.seed, 0});
  const auto& b = ctx.build_;

  ctx.old_train_ = materialize(ctx.dataset_, b.old_job.view, Split::kTrain);
  ctx.new_train_ = materialize(ctx.dataset_, b.new_job.view, Split::kTrain);

  TrainConfig old_config = config.train;
  old_config.seed = b.old_job.seed;
  ctx.old_model_ = train(init_model(b.old_job.spec, old_config.seed), ctx.old_train_,
                         cross_entropy_objective(), old_config)
                       .model;
  ctx.oracle_ = std::make_shared<const OldModelOracle>(
      OldModelOracle::from_model(ctx.old_model_, ctx.new_train_, b.old_to_new_classes()));

  ctx.train_eval_idx_ = b.restricted_indices(ctx.dataset_, Split::kTrain);
  ctx.old_eval_pred_ = original_predictions(ctx.old_model_, ctx.dataset_, b.plan.test_indices, b.plan.old_to_original);
  ctx.old_train_pred_ = original_predictions(ctx.old_model_, ctx.dataset_, ctx.train_eval_idx_, b.plan.old_to_original);

  if (ensemble_size > 0) {
    ctx.old_ensemble_ = train_ensemble(b.old_job.spec, ctx.old_train_, config.train, ensemble_size,
                                       config.train.seed + kOldEnsembleOffset);
  }
  return ctx;
}

bool ExperimentContext::compatible_with(const ExperimentConfig& config) const {
  return same_protocol(config_, config);
}

RunArtifacts ExperimentContext::run(const ExperimentConfig& config, std::size_t repetition) const {
  RunArtifacts art;
  art.repetition = repetition;
  try {
    validate(config);
    if (!compatible_with(config)) throw std::invalid_argument("config does not match the prepared scenario");
    const auto& b = build_;
    const auto& plan = b.plan;
    const SeedPolicy seeds{config.train.seed, repetition};

    const bool ensemble = config.method == Method::kEnsemble;
    const std::size_t members = ensemble ? config.ensemble_size : 1;
    const Ensemble* old_ensemble = nullptr;
    std::optional<Ensemble> old_prefix;
    if (ensemble) {
      if (!old_ensemble_ || old_ensemble_->size() < members) {
        throw std::logic_error("context was prepared without a large enough old ensemble");
      }
      old_prefix = old_ensemble_->prefix(members);
      old_ensemble = &*old_prefix;
    }
    const auto old_eval = ensemble ? original_predictions(*old_ensemble, dataset_, plan.test_indices, plan.old_to_original)
                                   : old_eval_pred_;
    const auto old_train = ensemble ? original_predictions(*old_ensemble, dataset_, train_eval_idx_, plan.old_to_original)
                                    : old_train_pred_;

    const SampleObjective objective = make_objective(config.pc, oracle_);
    std::vector<Trainer> trainers;
    trainers.reserve(members);
    for (std::size_t j = 0; j < members; ++j) {
      TrainConfig tc = config.train;
      tc.seed = ensemble ? config.train.seed + kNewEnsembleOffset + kMaxEnsembleSize * repetition + j
                         : seeds.new_seed();
      MLPModel init = b.new_job.init_from_old ? old_model_ : init_model(b.new_job.spec, tc.seed);
      trainers.emplace_back(std::move(init), new_train_, objective, tc);
    }

    const auto current = [&] {
      std::vector<MLPModel> ms;
      for (const auto& t : trainers) ms.push_back(t.model());
      return Ensemble(std::move(ms));
    };
    std::vector<PredictionRecord> eval_records;
    std::vector<PredictionRecord> train_records;
    for (std::size_t e = 0; e < config.train.epochs; ++e) {
      double er_train = 0.0;
      parallel_for(trainers.size(), [&](std::size_t j) { trainers[j].run_epoch(); });
      const Ensemble now = current();
      if (ensemble) {
        er_train = flip_report(ensemble_records(now, now, new_train_)).er_new;
      } else {
        er_train = error_rate(now.members().front(), new_train_);
      }
      eval_records = make_records(dataset_, plan.test_indices, old_eval,
                                  original_predictions(now, dataset_, plan.test_indices, plan.new_to_original));
      train_records = make_records(dataset_, train_eval_idx_, old_train,
                                   original_predictions(now, dataset_, train_eval_idx_, plan.new_to_original));
      const FlipReport val = flip_report(eval_records);
      const FlipReport tr = flip_report(train_records);
      art.series.push_back({e + 1, er_train, val.er_new, val.nfr, val.rel_nfr, tr.nfr});
      art.final_report = val;
      art.final_train_report = tr;
    }
    if (config.train.epochs == 0) throw std::invalid_argument("epochs must be >= 1 for an experiment run");

    const Ensemble final_models = current();
    art.new_param_count = final_models.parameter_count();
    art.records = std::move(eval_records);
    if (ensemble) {
      for (std::size_t i : plan.test_indices) {
        std::vector<Vector> probs;
        for (const auto& m : final_models.members()) probs.push_back(softmax(logits(m, dataset_.features.row(i))));
        art.uncertainty.push_back({i, predictive_entropy(probs)});
      }
    }
    art.ok = true;
  } catch (const std::exception& ex) {
    art.ok = false;
    art.error = ex.what();
    art.series.clear();
    art.records.clear();
    art.uncertainty.clear();
  }
  return art;
}

namespace {

Summary summarize_runs(const std::vector<RunArtifacts>& runs) {
  Summary s;
  std::vector<double> er_old, er_new, nfr, pfr, rel;
  for (const auto& r : runs) {
    if (!r.ok) {
      ++s.failed;
      continue;
    }
    ++s.runs;
    er_old.push_back(r.final_report.er_old);
    er_new.push_back(r.final_report.er_new);
    nfr.push_back(r.final_report.nfr);
    pfr.push_back(r.final_report.pfr);
    if (r.final_report.rel_nfr) rel.push_back(*r.final_report.rel_nfr);
    s.new_param_count = r.new_param_count;
  }
  if (s.runs == 0) {
    // Nothing finished: leave every statistic undefined.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.er_old = s.er_new = s.nfr = s.pfr = Stat{nan, nan, nan};
    return s;
  }
  s.er_old = summarize(er_old);
  s.er_new = summarize(er_new);
  s.nfr = summarize(nfr);
  s.pfr = summarize(pfr);
  if (rel.size() == s.runs) s.rel_nfr = summarize(rel);
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentContext& context, const ExperimentConfig& config) {
  ExperimentResult result;
  result.config = config;
  result.runs.resize(config.repetitions);
  for (std::size_t r = 0; r < config.repetitions; ++r) result.runs[r] = context.run(config, r);
  result.summary = summarize_runs(result.runs);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto context = ExperimentContext::prepare(
      config, config.method == Method::kEnsemble ? config.ensemble_size : 0);
  return run_experiment(context, config);
}

Comparison compare_methods(std::span<const ExperimentConfig> configs) {
  if (configs.empty()) throw std::invalid_argument("no configs to compare");
  std::size_t largest_ensemble = 0;
  for (const auto& c : configs) {
    if (!same_protocol(c, configs.front()) || c.repetitions != configs.front().repetitions) {
      throw std::invalid_argument("config '" + c.label() + "' does not share the scenario of '" +
                                  configs.front().label() + "'");
    }
    if (c.method == Method::kEnsemble) largest_ensemble = std::max(largest_ensemble, c.ensemble_size);
  }
  const auto context = ExperimentContext::prepare(configs.front(), largest_ensemble);
  Comparison out;
  for (const auto& c : configs) {
    out.results.push_back(run_experiment(context, c));
    const auto& s = out.results.back().summary;
    out.rows.push_back({c.label(), s.er_old.median, s.er_new.median, s.nfr.median,
                        s.rel_nfr ? std::optional<double>(s.rel_nfr->median) : std::nullopt, s.new_param_count});
  }
  return out;
}

FocalSweep sweep_focal(const ExperimentConfig& config, std::span<const FilterSpec> grid) {
  if (grid.empty()) throw std::invalid_argument("focal grid is empty");
  if (config.pc.mode != PCMode::kFocal) throw std::invalid_argument("focal sweep needs an FD-KL or FD-LM config");
  const auto context = ExperimentContext::prepare(config);
  FocalSweep out;
  for (const auto& f : grid) {
    ExperimentConfig c = config;
    c.pc.filter = f;
    out.results.push_back(run_experiment(context, c));
    const auto& s = out.results.back().summary;
    out.rows.push_back({f.alpha, f.beta, s.er_new.median, s.nfr.median,
                        s.rel_nfr ? std::optional<double>(s.rel_nfr->median) : std::nullopt, s.runs,
                        s.failed});
  }
  return out;
}

std::vector<SweepResult> sweep_ensemble(const ExperimentConfig& config, std::span<const std::size_t> sizes) {
  validate(config);
  if (sizes.empty() || sizes.back() > kMaxEnsembleSize) throw std::invalid_argument("ensemble sizes out of range");
  const Dataset dataset = generate(config.dataset);
  const ScenarioBuild b = build_scenario(config.scenario, dataset, SeedPolicy{config.train.seed, 0});
  const TrainingData train_data = materialize(dataset, b.new_job.view, Split::kTrain);
  const TrainingData eval_data = materialize(dataset, b.new_job.view, Split::kTest);
  const auto old_spec = dense_spec(dataset.features.cols(), config.scenario.old_hidden, train_data.num_classes);
  std::vector<SweepResult> out;
  for (std::size_t r = 0; r < config.repetitions; ++r) {
    const std::uint64_t old_base = config.train.seed + kSweepOffset + 2 * kMaxEnsembleSize * r;
    out.push_back(sweep_ensemble_size(old_spec, b.new_job.spec, train_data, eval_data, config.train, sizes,
                                      {old_base, old_base + kMaxEnsembleSize}));
  }
  return out;
}

SweepResult median_sweep(std::span<const SweepResult> results) {
  if (results.empty()) throw std::invalid_argument("no sweep results");
  SweepResult out;
  for (std::size_t i = 0; i < results.front().rows.size(); ++i) {
    std::vector<double> er_old, er_new, nfr, rel;
    for (const auto& r : results) {
      const auto& row = r.rows.at(i);
      er_old.push_back(row.er_old);
      er_new.push_back(row.er_new);
      nfr.push_back(row.nfr);
      if (row.rel_nfr) rel.push_back(*row.rel_nfr);
    }
    SweepRow m{results.front().rows[i].size, summarize(er_old).median, summarize(er_new).median,
               summarize(nfr).median, std::nullopt};
    if (rel.size() == results.size()) m.rel_nfr = summarize(rel).median;
    out.rows.push_back(m);
  }
  return out;
}

}  // namespace pct
