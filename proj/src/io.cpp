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

#include "pct/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pct {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("bad value for '") + key + "': " + ex.what());
  }
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json stat_json(const Stat& s) { return Json{{"median", s.median}, {"min", s.min}, {"max", s.max}}; }

}  // namespace

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw std::invalid_argument("unknown format '" + name + "' (expected csv or json)");
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_number(const std::optional<double>& value) {
  return value ? format_number(*value) : std::string("nan");
}

Json to_json(const FlipReport& r) {
  return Json{{"n", r.n},
              {"both_correct", r.counts.both_correct},
              {"negative_flip", r.counts.negative_flip},
              {"positive_flip", r.counts.positive_flip},
              {"both_wrong", r.counts.both_wrong},
              {"er_old", r.er_old},
              {"er_new", r.er_new},
              {"nfr", r.nfr},
              {"pfr", r.pfr},
              {"rel_nfr", optional_number(r.rel_nfr)}};
}

FlipReport flip_report_from_json(const Json& j) {
  check_keys(j, {"n", "both_correct", "negative_flip", "positive_flip", "both_wrong", "er_old", "er_new", "nfr",
                 "pfr", "rel_nfr"},
             "flip report");
  QuadrantCounts c{j.at("both_correct").get<std::size_t>(), j.at("negative_flip").get<std::size_t>(),
                   j.at("positive_flip").get<std::size_t>(), j.at("both_wrong").get<std::size_t>()};
  FlipReport r = flip_report_from_counts(c);
  if (r.n != j.at("n").get<std::size_t>()) throw std::invalid_argument("flip report counts do not sum to n");
  return r;
}

Json to_json(const SyntheticSpec& s) {
  return Json{{"K", s.num_classes},
              {"input_dim", s.input_dim},
              {"samples_per_class", s.samples_per_class},
              {"cluster_spread", s.cluster_spread},
              {"class_center_scale", s.class_center_scale},
              {"label_noise", s.label_noise},
              {"seed", s.seed}};
}

SyntheticSpec synthetic_spec_from_json(const Json& j) {
  check_keys(j, {"K", "input_dim", "samples_per_class", "cluster_spread", "class_center_scale", "label_noise", "seed"},
             "dataset");
  SyntheticSpec d = reference_task();
  d.num_classes = get_or(j, "K", d.num_classes);
  d.input_dim = get_or(j, "input_dim", d.input_dim);
  d.samples_per_class = get_or(j, "samples_per_class", d.samples_per_class);
  d.cluster_spread = get_or(j, "cluster_spread", d.cluster_spread);
  d.class_center_scale = get_or(j, "class_center_scale", d.class_center_scale);
  d.label_noise = get_or(j, "label_noise", d.label_noise);
  d.seed = get_or(j, "seed", d.seed);
  return d;
}

Json to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate}, {"momentum", c.momentum},
              {"batch_size", c.batch_size},       {"epochs", c.epochs},
              {"lr_decay_factor", c.lr_decay_factor}, {"lr_decay_every", c.lr_decay_every},
              {"seed", c.seed},                   {"weight_init", c.weight_init}};
}

TrainConfig train_config_from_json(const Json& j) {
  check_keys(j, {"learning_rate", "momentum", "batch_size", "epochs", "lr_decay_factor", "lr_decay_every", "seed",
                 "weight_init"},
             "train");
  TrainConfig c;
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.momentum = get_or(j, "momentum", c.momentum);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.epochs = get_or(j, "epochs", c.epochs);
  c.lr_decay_factor = get_or(j, "lr_decay_factor", c.lr_decay_factor);
  c.lr_decay_every = get_or(j, "lr_decay_every", c.lr_decay_every);
  c.seed = get_or(j, "seed", c.seed);
  c.weight_init = get_or(j, "weight_init", c.weight_init);
  return c;
}

Json to_json(const PCLossConfig& c) {
  Json distance = std::holds_alternative<KLDistance>(c.distance)
                      ? Json{{"kind", "KL"}, {"tau", std::get<KLDistance>(c.distance).tau}}
                      : Json{{"kind", "LogitMatch"}};
  return Json{{"lambda", c.lambda},
              {"filter", Json{{"alpha", c.filter.alpha}, {"beta", c.filter.beta}}},
              {"distance", distance},
              {"mode", to_string(c.mode)}};
}

PCLossConfig pc_config_from_json(const Json& j) {
  check_keys(j, {"lambda", "filter", "distance", "mode"}, "pc");
  PCLossConfig c;
  c.lambda = get_or(j, "lambda", c.lambda);
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    check_keys(f, {"alpha", "beta"}, "pc.filter");
    c.filter.alpha = get_or(f, "alpha", c.filter.alpha);
    c.filter.beta = get_or(f, "beta", c.filter.beta);
  }
  if (j.contains("distance")) {
    const auto& d = j.at("distance");
    check_keys(d, {"kind", "tau"}, "pc.distance");
    const auto kind = get_or<std::string>(d, "kind", "LogitMatch");
    if (kind == "KL") {
      c.distance = KLDistance{get_or(d, "tau", KLDistance{}.tau)};
    } else if (kind == "LogitMatch") {
      if (d.contains("tau")) throw std::invalid_argument("tau only applies to the KL distance");
      c.distance = LogitMatchDistance{};
    } else {
      throw std::invalid_argument("unknown distance kind '" + kind + "'");
    }
  }
  if (j.contains("mode")) c.mode = pc_mode_from_string(j.at("mode").get<std::string>());
  return c;
}

namespace {

Json view_json(const DataViewSpec& v) {
  return Json{{"sample_fraction", v.sample_fraction}, {"class_subset", v.class_subset}};
}

DataViewSpec view_from_json(const Json& j, const std::string& where) {
  check_keys(j, {"sample_fraction", "class_subset"}, where);
  DataViewSpec v;
  v.sample_fraction = get_or(j, "sample_fraction", v.sample_fraction);
  v.class_subset = get_or(j, "class_subset", v.class_subset);
  return v;
}

std::vector<std::size_t> hidden_from_json(const Json& j, const std::string& where) {
  check_keys(j, {"hidden"}, where);
  return j.at("hidden").get<std::vector<std::size_t>>();
}

}  // namespace

Json to_json(const UpdateScenario& s) {
  return Json{{"kind", to_string(s.kind)},
              {"old_spec", Json{{"hidden", s.old_hidden}}},
              {"new_spec", Json{{"hidden", s.new_hidden}}},
              {"old_data_view", view_json(s.old_data)},
              {"new_data_view", view_json(s.new_data)},
              {"init_from_old", s.init_from_old}};
}

UpdateScenario scenario_from_json(const Json& j) {
  check_keys(j, {"kind", "old_spec", "new_spec", "old_data_view", "new_data_view", "init_from_old"}, "scenario");
  const auto kind = update_kind_from_string(get_or<std::string>(j, "kind", "SameArchRetrain"));
  // Fields left out take the preset of the named kind.
  UpdateScenario s = preset_scenario(kind, reference_task().num_classes);
  if (j.contains("old_spec")) s.old_hidden = hidden_from_json(j.at("old_spec"), "scenario.old_spec");
  if (j.contains("new_spec")) s.new_hidden = hidden_from_json(j.at("new_spec"), "scenario.new_spec");
  if (j.contains("old_data_view")) s.old_data = view_from_json(j.at("old_data_view"), "scenario.old_data_view");
  if (j.contains("new_data_view")) s.new_data = view_from_json(j.at("new_data_view"), "scenario.new_data_view");
  s.init_from_old = get_or(j, "init_from_old", s.init_from_old);
  return s;
}

Json to_json(const ExperimentConfig& c) {
  return Json{{"name", c.label()},
              {"scenario", to_json(c.scenario)},
              {"dataset", to_json(c.dataset)},
              {"train", to_json(c.train)},
              {"method", to_string(c.method)},
              {"ensemble_size", c.ensemble_size},
              {"pc", to_json(c.pc)},
              {"repetitions", c.repetitions},
              {"output_dir", c.output_dir}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  check_keys(j, {"name", "scenario", "dataset", "train", "method", "ensemble_size", "pc", "repetitions",
                 "output_dir", "methods", "focal_grid", "ensemble_sizes"},
             "config");
  ExperimentConfig c;
  c.dataset = j.contains("dataset") ? synthetic_spec_from_json(j.at("dataset")) : reference_task();
  c.scenario = j.contains("scenario") ? scenario_from_json(j.at("scenario"))
                                      : preset_scenario(UpdateKind::kSameArchRetrain, c.dataset.num_classes);
  if (j.contains("scenario") && c.scenario.kind == UpdateKind::kClassGrowth &&
      !j.at("scenario").contains("old_data_view")) {
    c.scenario.old_data = preset_scenario(UpdateKind::kClassGrowth, c.dataset.num_classes).old_data;
  }
  c.train = j.contains("train") ? train_config_from_json(j.at("train")) : TrainConfig{};
  c.method = method_from_string(get_or<std::string>(j, "method", "NoTreatment"));
  c.ensemble_size = get_or(j, "ensemble_size", c.ensemble_size);
  if (j.contains("pc")) {
    const auto& pj = j.at("pc");
    c.pc = pc_config_from_json(pj);
    const PCMode given_mode = c.pc.mode;
    const auto given_distance = c.pc.distance.index();
    apply_method(c, c.method);
    if (pj.contains("mode") && given_mode != c.pc.mode) {
      throw std::invalid_argument("pc.mode " + to_string(given_mode) + " contradicts method " + to_string(c.method));
    }
    if (pj.contains("distance") && c.pc.mode == PCMode::kFocal && given_distance != c.pc.distance.index()) {
      throw std::invalid_argument("pc.distance contradicts method " + to_string(c.method));
    }
  } else {
    apply_method(c, c.method);
  }
  c.repetitions = get_or(j, "repetitions", c.repetitions);
  c.output_dir = get_or(j, "output_dir", c.output_dir);
  c.name = get_or<std::string>(j, "name", "");
  if (c.name == to_string(c.method)) c.name.clear();
  validate(c);
  return c;
}

Json to_json(const Summary& s) {
  return Json{{"runs", s.runs},
              {"failed", s.failed},
              {"er_old", stat_json(s.er_old)},
              {"er_new", stat_json(s.er_new)},
              {"nfr", stat_json(s.nfr)},
              {"pfr", stat_json(s.pfr)},
              {"rel_nfr", s.rel_nfr ? stat_json(*s.rel_nfr) : Json(nullptr)},
              {"params", s.new_param_count}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw std::invalid_argument(path.string() + ": " + ex.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
  const std::size_t d = dataset.features.cols();
  for (std::size_t f = 0; f < d; ++f) out << 'x' << f << ',';
  out << "label,split\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.features.row(i)) out << format_number(v) << ',';
    out << dataset.labels[i] << ',' << to_string(dataset.splits[i]) << '\n';
  }
}

void write_epoch_csv(std::ostream& out, std::span<const EpochRow> series) {
  out << "epoch,er_train,er_val,nfr_val,rel_nfr_val,nfr_train\n";
  for (const auto& r : series) {
    out << r.epoch << ',' << format_number(r.er_train) << ',' << format_number(r.er_val) << ','
        << format_number(r.nfr_val) << ',' << format_number(r.rel_nfr_val) << ',' << format_number(r.nfr_train)
        << '\n';
  }
}

Json epoch_series_json(std::span<const EpochRow> series) {
  Json arr = Json::array();
  for (const auto& r : series) {
    arr.push_back(Json{{"epoch", r.epoch},
                       {"er_train", r.er_train},
                       {"er_val", r.er_val},
                       {"nfr_val", r.nfr_val},
                       {"rel_nfr_val", optional_number(r.rel_nfr_val)},
                       {"nfr_train", r.nfr_train}});
  }
  return arr;
}

void write_flips_csv(std::ostream& out, std::span<const PredictionRecord> records) {
  out << "sample_id,true_label,old_pred,new_pred,quadrant\n";
  for (const auto& r : records) {
    out << r.sample_id << ',' << r.true_label << ',' << r.old_pred << ',' << r.new_pred << ','
        << to_string(classify_flip(r)) << '\n';
  }
}

void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
  out << "method,er_old,er_new,nfr,rel_nfr,params\n";
  for (const auto& r : rows) {
    out << r.method << ',' << format_number(r.er_old) << ',' << format_number(r.er_new) << ','
        << format_number(r.nfr) << ',' << format_number(r.rel_nfr) << ',' << r.params << '\n';
  }
}

Json comparison_json(std::span<const ComparisonRow> rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back(Json{{"method", r.method},
                       {"er_old", r.er_old},
                       {"er_new", r.er_new},
                       {"nfr", r.nfr},
                       {"rel_nfr", optional_number(r.rel_nfr)},
                       {"params", r.params}});
  }
  return arr;
}

void write_focal_csv(std::ostream& out, std::span<const FocalSweepRow> rows) {
  out << "alpha,beta,er_new,nfr,rel_nfr\n";
  for (const auto& r : rows) {
    out << format_number(r.alpha) << ',' << format_number(r.beta) << ',' << format_number(r.er_new) << ','
        << format_number(r.nfr) << ',' << format_number(r.rel_nfr) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "L,er_old,er_new,nfr,rel_nfr\n";
  for (const auto& r : result.rows) {
    out << r.size << ',' << format_number(r.er_old) << ',' << format_number(r.er_new) << ','
        << format_number(r.nfr) << ',' << format_number(r.rel_nfr) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const UncertaintyHistogram& h) {
  out << "bin_lo,bin_hi,negative_flips,others\n";
  for (std::size_t b = 0; b < h.flip_counts.size(); ++b) {
    out << format_number(h.edges[b]) << ',' << format_number(h.edges[b + 1]) << ',' << h.flip_counts[b] << ','
        << h.other_counts[b] << '\n';
  }
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& dir, ReportFormat format) {
  std::filesystem::create_directories(dir);
  for (const auto& run : result.runs) {
    const auto run_dir = dir / ("rep_" + std::to_string(run.repetition));
    if (!run.ok) {
      write_text_file(run_dir / "error.txt", run.error + "\n");
      continue;
    }
    if (format == ReportFormat::kCsv) {
      std::ostringstream series;
      write_epoch_csv(series, run.series);
      write_text_file(run_dir / "epochs.csv", series.str());
    } else {
      write_text_file(run_dir / "epochs.json", epoch_series_json(run.series).dump(2) + "\n");
    }
    Json final = Json{{"test", to_json(run.final_report)},
                      {"train", to_json(run.final_train_report)},
                      {"params", run.new_param_count}};
    write_text_file(run_dir / "final_report.json", final.dump(2) + "\n");
    std::ostringstream flips;
    write_flips_csv(flips, run.records);
    write_text_file(run_dir / "flips.csv", flips.str());
    if (!run.uncertainty.empty()) {
      std::ostringstream hist;
      const auto edges = entropy_bin_edges(result.config.dataset.num_classes);
      write_histogram_csv(hist, nfr_by_uncertainty_bin(run.records, run.uncertainty, edges));
      write_text_file(run_dir / "uncertainty.csv", hist.str());
    }
  }
  Json summary = Json{{"config", to_json(result.config)}, {"summary", to_json(result.summary)}};
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace pct
