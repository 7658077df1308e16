/*
 * Copyright 2026 The crimpxai Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "crimpxai/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> class_policy;
  std::vector<std::string> strategies;
  std::vector<std::string> instances;
};

crimpxai::RunConfig resolve_config(const Overrides& o) {
  auto config = crimpxai::load_run_config(o.config_path);
  if (o.seed) config.seed = *o.seed;
  if (o.jobs) config.jobs = *o.jobs;
  if (o.out) config.out_dir = *o.out;
  if (o.format) {
    config.format = *o.format == "json" ? crimpxai::TableFormat::kJson : crimpxai::TableFormat::kCsv;
  }
  if (o.class_policy) {
    const std::string& p = *o.class_policy;
    if (p == "predicted") {
      config.class_policy = {crimpxai::ClassPolicy::kPredicted, 0};
    } else if (p == "all") {
      config.class_policy = {crimpxai::ClassPolicy::kAll, 0};
    } else {
      config.class_policy = {crimpxai::ClassPolicy::kFixed, std::stoi(p)};
    }
  }
  if (!o.strategies.empty()) {
    config.strategies.clear();
    for (const auto& s : o.strategies) {
      const auto kind = crimpxai::parse_replacement_kind(s);
      if (!kind) throw crimpxai::ConfigError("--strategy: unknown strategy '" + s + "'");
      config.strategies.push_back(*kind);
    }
  }
  return config;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Run configuration (JSON)")->required();
  cmd->add_option("--seed", o.seed, "Global seed (overrides config)");
  cmd->add_option("--jobs", o.jobs, "Worker thread cap")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--format", o.format, "Tabular output format")
      ->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transparent fault detection for crimp force curves"};
  app.require_subcommand(1);
  Overrides o;

  auto* prepare = app.add_subcommand("prepare", "Load or generate curves, preprocess and split");
  auto* train = app.add_subcommand("train", "Grid search (optional) and fit the forest");
  auto* explain = app.add_subcommand("explain", "Shapley attributions, phase summaries and SVGs");
  auto* selectivity = app.add_subcommand("selectivity", "Perturbation retraining study");
  auto* report = app.add_subcommand("report", "Run every stage and index the outputs");
  for (auto* cmd : {prepare, train, explain, selectivity, report}) add_common(cmd, o);
  explain->add_option("--instances", o.instances, "Instance ids to explain")->delimiter(',');
  explain->add_option("--class-policy", o.class_policy, "predicted | all | <class index>");
  report->add_option("--class-policy", o.class_policy, "predicted | all | <class index>");
  selectivity->add_option("--strategy", o.strategies, "Restrict to ZERO, RANDOM or REMOVE")
      ->delimiter(',');
  report->add_option("--strategy", o.strategies, "Restrict to ZERO, RANDOM or REMOVE")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = resolve_config(o);
    if (prepare->parsed()) {
      const auto prepared = crimpxai::cmd_prepare(config);
      std::cout << fmt::format("prepared {} vectors ({} train, {} test)\n",
                               prepared.table.vectors.size(), prepared.split.train_ids.size(),
                               prepared.split.test_ids.size());
    } else if (train->parsed()) {
      const auto outcome = crimpxai::cmd_train(config);
      std::cout << fmt::format("test accuracy {:.4f}, macro F1 {:.4f}\n",
                               outcome.metrics.accuracy, outcome.metrics.macro_f1);
    } else if (explain->parsed()) {
      const auto outcome = crimpxai::cmd_explain(config, o.instances);
      std::cout << fmt::format("{} attributions, {} SVGs\n", outcome.attributions.size(),
                               outcome.svg_count);
    } else if (selectivity->parsed()) {
      const auto study = crimpxai::cmd_selectivity(config);
      std::cout << fmt::format("base accuracy {:.4f}, {} plans\n", study.base_accuracy,
                               study.results.size());
      int failed = 0;
      for (const auto& r : study.results) {
        if (r.error) {
          std::cerr << fmt::format("plan {} {} failed: {}\n",
                                   crimpxai::to_string(r.plan.strategy.kind),
                                   r.plan.phase_label(), *r.error);
          ++failed;
        }
      }
      if (failed > 0) return 1;
    } else if (report->parsed()) {
      const auto emitted = crimpxai::cmd_report(config);
      std::cout << fmt::format("indexed {} files\n", emitted.written.size());
      for (const auto& e : emitted.errors) std::cerr << "warning: " << e << '\n';
      if (!emitted.errors.empty()) return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
