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

#ifndef CRIMPXAI_PIPELINE_HPP_
#define CRIMPXAI_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crimpxai/dataset.hpp"
#include "crimpxai/error.hpp"
#include "crimpxai/forest.hpp"
#include "crimpxai/metrics.hpp"
#include "crimpxai/perturb.hpp"
#include "crimpxai/phases.hpp"
#include "crimpxai/preprocess.hpp"
#include "crimpxai/report.hpp"
#include "crimpxai/shapley.hpp"

namespace crimpxai {

// Config validation failure; the message starts with the offending field path
// (e.g. "data.curves_dir: ...").
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class TableFormat { kCsv, kJson };

struct DataSource {
  std::optional<std::filesystem::path> curves_dir;
  std::optional<std::filesystem::path> labels;
  std::optional<SynthSpec> synth;
  std::size_t synth_per_class = 200;
  std::uint64_t synth_seed = 0;
};

enum class SummaryScope { kTest, kAll };

// Declarative description of one run. The JSON grammar is documented in
// docs/config.md.
struct RunConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::filesystem::path out_dir;
  DataSource data;
  LabelMode label_mode = LabelMode::kMajor;
  PreprocessConfig preprocess;
  double split_ratio = 0.8;
  std::uint64_t split_seed = 0;
  std::optional<HyperGrid> grid;
  Hyperparams hyperparams;
  PhaseBoundaries boundaries;
  ClassSelection class_policy;
  SummaryScope summary_scope = SummaryScope::kTest;
  std::size_t svg_limit = 10;
  std::optional<std::filesystem::path> expert_ratings;
  bool selectivity = true;
  std::vector<ReplacementKind> strategies{ReplacementKind::kZero, ReplacementKind::kRandom,
                                          ReplacementKind::kRemove};
  std::uint64_t random_seed = 0;
  TableFormat format = TableFormat::kCsv;
};

// Relative paths are resolved against `base_dir`. Seeds not given explicitly
// are taken from the top-level "seed", which is required.
RunConfig run_config_from_json(const nlohmann::json& json,
                               const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
// Throws ConfigError naming the field for missing paths and invalid values.
void validate(const RunConfig& config);
// Snapshot of the effective configuration (output directory omitted so runs
// into different directories produce identical snapshots).
nlohmann::json to_json(const RunConfig& config);

// Model-ready rows persisted by `prepare`.
struct FeatureTable {
  std::vector<FeatureVector> vectors;
  std::vector<QualityLabel> labels;
};

void save_features(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable load_features(const std::filesystem::path& path);

struct PreparedData {
  FeatureTable table;
  SplitManifest split;
  std::map<std::string, std::optional<int>> signal_phase;  // synthetic runs only
};

struct TrainOutcome {
  Forest forest;
  std::optional<GridSearchResult> grid;
  ConfusionMatrix confusion;
  MetricsSummary metrics;
};

struct ExplainOutcome {
  std::vector<Attribution> attributions;
  std::vector<LabeledImportance> importances;
  ClassPhaseSummary summary;
  std::size_t svg_count = 0;
  std::vector<ClassAgreement> agreement;
};

// File names inside the output directory.
namespace artifacts {
inline constexpr const char* kFeatures = "features.csv";
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kDataset = "dataset.json";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kCvReport = "cv_report";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kConfusion = "confusion.txt";
inline constexpr const char* kAttributions = "attributions.csv";
inline constexpr const char* kPhaseImportance = "phase_importance.csv";
inline constexpr const char* kPhaseSummary = "phase_summary";
inline constexpr const char* kExpertAgreement = "expert_agreement.json";
inline constexpr const char* kSvgDir = "svg";
inline constexpr const char* kSelectivity = "selectivity";
inline constexpr const char* kSelectivityTables = "selectivity.txt";
inline constexpr const char* kConfigSnapshot = "config.json";
}  // namespace artifacts

// Loads or generates curves, preprocesses them and writes features, split
// manifest and dataset summary.
PreparedData cmd_prepare(const RunConfig& config);

// Grid search (or the fixed hyperparameters), final fit on the training split,
// test-set metrics; writes model, CV report, metrics and confusion matrix.
TrainOutcome cmd_train(const RunConfig& config);

// Attributions, per-instance phase importance, class phase summary, SVGs and
// the optional expert agreement report. With `instance_ids` empty the summary
// scope (test split or all rows) is explained.
ExplainOutcome cmd_explain(const RunConfig& config,
                           const std::vector<std::string>& instance_ids = {});

// Retrains one model per perturbation plan with the trained model's
// hyperparameters and writes the result tables.
SelectivityStudy cmd_selectivity(const RunConfig& config);

// prepare -> train -> explain -> selectivity (if enabled), config snapshot and
// an index of every file with SHA-256 checksums.
EmitResult cmd_report(const RunConfig& config);

}  // namespace crimpxai

#endif  // CRIMPXAI_PIPELINE_HPP_
