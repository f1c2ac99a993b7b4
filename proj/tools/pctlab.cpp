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

// pctlab: command-line front end for the experiment harness.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "pct/harness.hpp"
#include "pct/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_config = true) {
  auto* opt = cmd->add_option("-c,--config", o.config_path, "experiment config (JSON)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the base training seed");
  cmd->add_option("--out", o.out, "override the output directory");
  cmd->add_option("--format", o.format, "report format")->check(CLI::IsMember({"csv", "json"}));
}

pct::Json load_document(const CommonOptions& o) {
  return o.config_path.empty() ? pct::Json::object() : pct::read_json_file(o.config_path);
}

pct::ExperimentConfig load_config(const pct::Json& doc, const CommonOptions& o) {
  pct::ExperimentConfig c = pct::experiment_config_from_json(doc);
  if (o.seed) c.train.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  pct::validate(c);
  return c;
}

std::string summary_line(const std::string& label, const pct::Summary& s) {
  std::ostringstream line;
  line << label << ": er_old=" << pct::format_number(s.er_old.median)
       << " er_new=" << pct::format_number(s.er_new.median) << " nfr=" << pct::format_number(s.nfr.median)
       << " rel_nfr=" << (s.rel_nfr ? pct::format_number(s.rel_nfr->median) : std::string("nan"))
       << " runs=" << s.runs << " failed=" << s.failed;
  return line.str();
}

int cmd_generate(const CommonOptions& o) {
  const auto doc = load_document(o);
  pct::SyntheticSpec spec = doc.contains("dataset") ? pct::synthetic_spec_from_json(doc.at("dataset"))
                                                    : pct::reference_task();
  if (o.seed) spec.seed = *o.seed;
  const auto dataset = pct::generate(spec);
  std::ostringstream csv;
  pct::write_dataset_csv(csv, dataset);
  const fs::path out = o.out ? fs::path(*o.out) : fs::path("dataset.csv");
  pct::write_text_file(out, csv.str());
  std::cout << "wrote " << dataset.size() << " samples to " << out.string() << "\n";
  return 0;
}

int cmd_run(const CommonOptions& o) {
  const auto config = load_config(load_document(o), o);
  const auto result = pct::run_experiment(config);
  pct::emit_report(result, config.output_dir, pct::report_format_from_string(o.format));
  std::cout << summary_line(config.label(), result.summary) << "\n";
  return result.summary.failed == 0 ? 0 : 1;
}

std::vector<pct::ExperimentConfig> method_configs(const pct::Json& doc, const pct::ExperimentConfig& base) {
  std::vector<pct::ExperimentConfig> configs;
  std::vector<pct::Json> entries;
  if (doc.contains("methods")) {
    for (const auto& m : doc.at("methods")) entries.push_back(m);
  } else {
    for (const char* m : {"NoTreatment", "Naive", "FD-KL", "FD-LM", "Ensemble"}) entries.emplace_back(m);
  }
  for (const auto& e : entries) {
    pct::ExperimentConfig c = base;
    c.name.clear();
    if (e.is_string()) {
      pct::apply_method(c, pct::method_from_string(e.get<std::string>()));
    } else {
      pct::apply_method(c, pct::method_from_string(e.at("method").get<std::string>()));
      if (e.contains("name")) c.name = e.at("name").get<std::string>();
      if (e.contains("ensemble_size")) c.ensemble_size = e.at("ensemble_size").get<std::size_t>();
      if (e.contains("lambda")) c.pc.lambda = e.at("lambda").get<double>();
      if (e.contains("alpha")) c.pc.filter.alpha = e.at("alpha").get<double>();
      if (e.contains("beta")) c.pc.filter.beta = e.at("beta").get<double>();
      if (e.contains("tau")) c.pc.distance = pct::KLDistance{e.at("tau").get<double>()};
    }
    pct::validate(c);
    configs.push_back(std::move(c));
  }
  return configs;
}

int cmd_compare(const CommonOptions& o) {
  const auto doc = load_document(o);
  const auto base = load_config(doc, o);
  const auto configs = method_configs(doc, base);
  const auto cmp = pct::compare_methods(configs);
  const fs::path dir = base.output_dir;
  const auto format = pct::report_format_from_string(o.format);
  for (const auto& r : cmp.results) pct::emit_report(r, dir / r.config.label(), format);
  std::ostringstream table;
  if (format == pct::ReportFormat::kCsv) {
    pct::write_comparison_csv(table, cmp.rows);
    pct::write_text_file(dir / "comparison.csv", table.str());
  } else {
    table << pct::comparison_json(cmp.rows).dump(2) << "\n";
    pct::write_text_file(dir / "comparison.json", table.str());
  }
  std::cout << table.str();
  return 0;
}

int cmd_sweep_focal(const CommonOptions& o) {
  const auto doc = load_document(o);
  auto config = load_config(doc, o);
  if (config.pc.mode != pct::PCMode::kFocal) pct::apply_method(config, pct::Method::kFDLM);
  std::vector<pct::FilterSpec> grid;
  if (doc.contains("focal_grid")) {
    for (const auto& p : doc.at("focal_grid")) grid.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  } else {
    grid = {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 2}, {1, 5}, {1, 10}, {1, 20}, {1, 100}};
  }
  const auto sweep = pct::sweep_focal(config, grid);
  std::ostringstream table;
  pct::write_focal_csv(table, sweep.rows);
  pct::write_text_file(fs::path(config.output_dir) / "focal_sweep.csv", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_sweep_ensemble(const CommonOptions& o) {
  const auto doc = load_document(o);
  const auto config = load_config(doc, o);
  std::vector<std::size_t> sizes{1, 2, 4, 8, 16};
  if (doc.contains("ensemble_sizes")) sizes = doc.at("ensemble_sizes").get<std::vector<std::size_t>>();
  const auto results = pct::sweep_ensemble(config, sizes);
  const fs::path dir = config.output_dir;
  for (std::size_t r = 0; r < results.size(); ++r) {
    std::ostringstream rep;
    pct::write_sweep_csv(rep, results[r]);
    pct::write_text_file(dir / ("ensemble_sweep_rep" + std::to_string(r) + ".csv"), rep.str());
  }
  std::ostringstream table;
  pct::write_sweep_csv(table, pct::median_sweep(results));
  pct::write_text_file(dir / "ensemble_sweep.csv", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
  std::vector<std::pair<std::size_t, pct::FlipReport>> reports;
  const std::regex rep_name("rep_([0-9]+)");
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || !std::regex_match(name, m, rep_name)) continue;
    const auto file = entry.path() / "final_report.json";
    if (!fs::exists(file)) continue;
    reports.emplace_back(std::stoul(m[1].str()), pct::flip_report_from_json(pct::read_json_file(file).at("test")));
  }
  if (reports.empty()) throw std::runtime_error("no rep_*/final_report.json under " + in_dir);
  std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (format == "json") {
    pct::Json arr = pct::Json::array();
    for (const auto& [rep, r] : reports) {
      pct::Json row = pct::to_json(r);
      row["repetition"] = rep;
      arr.push_back(row);
    }
    std::cout << arr.dump(2) << "\n";
  } else {
    std::cout << "repetition,n,er_old,er_new,nfr,pfr,rel_nfr\n";
    for (const auto& [rep, r] : reports) {
      std::cout << rep << ',' << r.n << ',' << pct::format_number(r.er_old) << ','
                << pct::format_number(r.er_new) << ',' << pct::format_number(r.nfr) << ','
                << pct::format_number(r.pfr) << ',' << pct::format_number(r.rel_nfr) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pctlab: positive-congruent model update experiments"};
  app.require_subcommand(1);

  CommonOptions gen_opts, run_opts, cmp_opts, focal_opts, ens_opts;
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
  add_common(gen, gen_opts, false);
  auto* run = app.add_subcommand("run", "run one experiment config");
  add_common(run, run_opts);
  auto* cmp = app.add_subcommand("compare", "compare PCT methods on one scenario");
  add_common(cmp, cmp_opts);
  auto* focal = app.add_subcommand("sweep-focal", "sweep focal distillation (alpha, beta)");
  add_common(focal, focal_opts);
  auto* ens = app.add_subcommand("sweep-ensemble", "sweep the ensemble size");
  add_common(ens, ens_opts);
  std::string report_in, report_format = "csv";
  auto* rep = app.add_subcommand("report", "summarize the final reports of a run directory");
  rep->add_option("--in", report_in, "run output directory")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--format", report_format, "output format")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_opts);
    if (run->parsed()) return cmd_run(run_opts);
    if (cmp->parsed()) return cmd_compare(cmp_opts);
    if (focal->parsed()) return cmd_sweep_focal(focal_opts);
    if (ens->parsed()) return cmd_sweep_ensemble(ens_opts);
    if (rep->parsed()) return cmd_report(report_in, report_format);
  } catch (const std::exception& ex) {
    std::cerr << "pctlab: error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
