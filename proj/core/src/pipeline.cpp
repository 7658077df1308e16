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

#include "crimpxai/pipeline.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "crimpxai/csv.hpp"
#include "crimpxai/error.hpp"
#include "crimpxai/parallel.hpp"

namespace crimpxai {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(std::string_view field, std::string_view message) {
  throw ConfigError(fmt::format("{}: {}", field, message));
}

template <typename T>
T get_field(const json& object, const char* key, std::string_view path, T fallback) {
  if (!object.contains(key)) return fallback;
  try {
    return object.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(fmt::format("{}{}", path, key), e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

ClassSelection parse_class_policy(const json& value) {
  if (value.is_number_integer()) return {ClassPolicy::kFixed, value.get<int>()};
  if (value.is_object() && value.contains("fixed")) {
    return {ClassPolicy::kFixed, value.at("fixed").get<int>()};
  }
  const auto text = value.get<std::string>();
  if (text == "predicted") return {ClassPolicy::kPredicted, 0};
  if (text == "all") return {ClassPolicy::kAll, 0};
  config_error("explain.class_policy", "expected \"predicted\", \"all\" or a class index");
}

json class_policy_to_json(const ClassSelection& selection) {
  switch (selection.policy) {
    case ClassPolicy::kPredicted:
      return "predicted";
    case ClassPolicy::kAll:
      return "all";
    case ClassPolicy::kFixed:
      return {{"fixed", selection.fixed_class}};
  }
  return nullptr;
}

}  // namespace

RunConfig run_config_from_json(const json& root, const fs::path& base_dir) {
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig config;
  if (!root.contains("seed")) config_error("seed", "required (seeds are never implicit)");
  config.seed = get_field<std::uint64_t>(root, "seed", "", 0);
  config.jobs = get_field<int>(root, "jobs", "", 1);
  if (root.contains("out")) config.out_dir = resolve(base_dir, root.at("out").get<std::string>());
  const auto format = get_field<std::string>(root, "format", "", "csv");
  if (format == "csv") {
    config.format = TableFormat::kCsv;
  } else if (format == "json") {
    config.format = TableFormat::kJson;
  } else {
    config_error("format", "expected csv or json");
  }

  const json data = root.value("data", json::object());
  if (data.contains("synth")) {
    const json& synth = data.at("synth");
    try {
      config.data.synth = synth_spec_from_json(synth);
    } catch (const Error& e) {
      config_error("data.synth", e.what());
    }
    config.data.synth_per_class =
        get_field<std::size_t>(synth, "n_per_class", "data.synth.", 200);
    config.data.synth_seed = get_field<std::uint64_t>(synth, "seed", "data.synth.", config.seed);
  }
  if (data.contains("curves_dir")) {
    config.data.curves_dir = resolve(base_dir, data.at("curves_dir").get<std::string>());
  }
  if (data.contains("labels")) {
    config.data.labels = resolve(base_dir, data.at("labels").get<std::string>());
  }

  const auto mode = get_field<std::string>(root, "label_mode", "", "major");
  if (mode == "major") {
    config.label_mode = LabelMode::kMajor;
  } else if (mode == "fine") {
    config.label_mode = LabelMode::kFine;
  } else {
    config_error("label_mode", "expected major or fine");
  }

  if (root.contains("preprocess")) {
    try {
      config.preprocess = preprocess_config_from_json(root.at("preprocess"));
    } catch (const std::exception& e) {
      config_error("preprocess", e.what());
    }
  }

  const json split = root.value("split", json::object());
  config.split_ratio = get_field<double>(split, "ratio", "split.", 0.8);
  config.split_seed = get_field<std::uint64_t>(split, "seed", "split.", config.seed);

  const json model = root.value("model", json::object());
  try {
    if (model.contains("grid") && !model.at("grid").is_null()) {
      config.grid = model.at("grid") == "standard" ? HyperGrid::standard()
                                                   : hyper_grid_from_json(model.at("grid"));
    }
  } catch (const std::exception& e) {
    config_error("model.grid", e.what());
  }
  try {
    if (model.contains("hyperparams")) {
      config.hyperparams = hyperparams_from_json(model.at("hyperparams"));
    }
  } catch (const std::exception& e) {
    config_error("model.hyperparams", e.what());
  }

  if (root.contains("phases")) {
    try {
      config.boundaries = phase_boundaries_from_json(root.at("phases"));
    } catch (const std::exception& e) {
      config_error("phases", e.what());
    }
  }

  const json explain = root.value("explain", json::object());
  if (explain.contains("class_policy")) {
    try {
      config.class_policy = parse_class_policy(explain.at("class_policy"));
    } catch (const json::exception& e) {
      config_error("explain.class_policy", e.what());
    }
  }
  const auto scope = get_field<std::string>(explain, "phase_summary_scope", "explain.", "test");
  if (scope == "test") {
    config.summary_scope = SummaryScope::kTest;
  } else if (scope == "all") {
    config.summary_scope = SummaryScope::kAll;
  } else {
    config_error("explain.phase_summary_scope", "expected test or all");
  }
  config.svg_limit = get_field<std::size_t>(explain, "svg_limit", "explain.", 10);
  if (explain.contains("expert_ratings")) {
    config.expert_ratings = resolve(base_dir, explain.at("expert_ratings").get<std::string>());
  }

  const json selectivity = root.value("selectivity", json::object());
  config.selectivity = get_field<bool>(selectivity, "enabled", "selectivity.", true);
  config.random_seed =
      get_field<std::uint64_t>(selectivity, "random_seed", "selectivity.", config.seed);
  if (selectivity.contains("strategies")) {
    config.strategies.clear();
    for (const auto& s : selectivity.at("strategies")) {
      const auto kind = parse_replacement_kind(s.get<std::string>());
      if (!kind) config_error("selectivity.strategies", "unknown strategy " + s.dump());
      config.strategies.push_back(*kind);
    }
  }
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config: file not found: " + path.string());
  json root;
  try {
    root = json::parse(csv::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config: {}: {}", path.string(), e.what()));
  }
  return run_config_from_json(root, path.parent_path());
}

void validate(const RunConfig& config) {
  if (config.out_dir.empty()) config_error("out", "output directory is required");
  if (config.jobs < 1) config_error("jobs", "must be >= 1");
  const bool files = config.data.curves_dir || config.data.labels;
  if (files && config.data.synth) config_error("data", "give either files or synth, not both");
  if (!files && !config.data.synth) config_error("data", "no data source configured");
  if (files) {
    if (!config.data.curves_dir) config_error("data.curves_dir", "required with data.labels");
    if (!config.data.labels) config_error("data.labels", "required with data.curves_dir");
    if (!fs::is_directory(*config.data.curves_dir)) {
      config_error("data.curves_dir", "directory not found: " + config.data.curves_dir->string());
    }
    if (!fs::is_regular_file(*config.data.labels)) {
      config_error("data.labels", "file not found: " + config.data.labels->string());
    }
  }
  if (config.data.synth && config.data.synth_per_class == 0) {
    config_error("data.synth.n_per_class", "must be positive");
  }
  if (!(config.split_ratio > 0.0 && config.split_ratio < 1.0)) {
    config_error("split.ratio", "must be in (0, 1)");
  }
  if (config.boundaries.ends[3] != config.preprocess.window_len) {
    config_error("phases", fmt::format("last boundary {} must equal preprocess.window_len {}",
                                       config.boundaries.ends[3],
                                       config.preprocess.window_len));
  }
  if (config.expert_ratings && !fs::is_regular_file(*config.expert_ratings)) {
    config_error("explain.expert_ratings", "file not found: " + config.expert_ratings->string());
  }
  if (config.strategies.empty()) config_error("selectivity.strategies", "must not be empty");
}

json to_json(const RunConfig& config) {
  json data = json::object();
  if (config.data.synth) {
    json synth = to_json(*config.data.synth);
    synth["n_per_class"] = config.data.synth_per_class;
    synth["seed"] = config.data.synth_seed;
    data["synth"] = synth;
  }
  if (config.data.curves_dir) data["curves_dir"] = config.data.curves_dir->generic_string();
  if (config.data.labels) data["labels"] = config.data.labels->generic_string();
  json strategies = json::array();
  for (auto kind : config.strategies) strategies.push_back(to_string(kind));
  json explain = {{"class_policy", class_policy_to_json(config.class_policy)},
                  {"phase_summary_scope",
                   config.summary_scope == SummaryScope::kTest ? "test" : "all"},
                  {"svg_limit", config.svg_limit}};
  if (config.expert_ratings) explain["expert_ratings"] = config.expert_ratings->generic_string();
  return {{"seed", config.seed},
          {"format", config.format == TableFormat::kCsv ? "csv" : "json"},
          {"data", data},
          {"label_mode", config.label_mode == LabelMode::kMajor ? "major" : "fine"},
          {"preprocess", to_json(config.preprocess)},
          {"split", {{"ratio", config.split_ratio}, {"seed", config.split_seed}}},
          {"model",
           {{"grid", config.grid ? to_json(*config.grid) : json(nullptr)},
            {"hyperparams", to_json(config.hyperparams)}}},
          {"phases", to_json(config.boundaries)},
          {"explain", explain},
          {"selectivity",
           {{"enabled", config.selectivity},
            {"strategies", strategies},
            {"random_seed", config.random_seed}}}};
}

void save_features(const fs::path& path, const FeatureTable& table) {
  std::string out = "id,major,sub";
  const std::size_t d = table.vectors.empty() ? 0 : table.vectors.front().values.size();
  for (std::size_t j = 0; j < d; ++j) out += fmt::format(",f_{}", j);
  out += '\n';
  for (std::size_t i = 0; i < table.vectors.size(); ++i) {
    const auto& label = table.labels[i];
    out += table.vectors[i].id;
    out += ',';
    out += label.major_token();
    out += ',';
    if (label.sub()) out += std::to_string(*label.sub());
    for (double v : table.vectors[i].values) {
      out += ',';
      out += csv::format_double(v);
    }
    out += '\n';
  }
  csv::write_file(path, out);
}

FeatureTable load_features(const fs::path& path) {
  const std::string text = csv::read_file(path);
  const auto rows = csv::lines(text);
  FeatureTable table;
  if (rows.empty() || !csv::trim(rows[0]).starts_with("id,major,sub")) {
    throw ParseError(path.string() + ":1: expected header id,major,sub,f_0,...");
  }
  const std::size_t columns = csv::split(rows[0]).size();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (csv::trim(rows[r]).empty()) continue;
    const auto fields = csv::split(rows[r]);
    if (fields.size() != columns) {
      throw ParseError(fmt::format("{}:{}: expected {} fields, got {}", path.string(), r + 1,
                                   columns, fields.size()));
    }
    FeatureVector vec;
    vec.id = std::string(fields[0]);
    try {
      table.labels.push_back(QualityLabel::parse(fields[1], fields[2]));
    } catch (const InvalidArgument& e) {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), r + 1, e.what()));
    }
    vec.values.reserve(columns - 3);
    for (std::size_t j = 3; j < columns; ++j) {
      const auto v = csv::parse_double(fields[j]);
      if (!v) {
        throw ParseError(fmt::format("{}:{}: malformed value in column {}", path.string(),
                                     r + 1, j + 1));
      }
      vec.values.push_back(*v);
    }
    table.vectors.push_back(std::move(vec));
  }
  return table;
}

namespace {

void write_json(const fs::path& path, const json& value) {
  csv::write_file(path, value.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  try {
    return json::parse(csv::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string table_name(const char* stem, TableFormat format) {
  return fmt::format("{}.{}", stem, format == TableFormat::kCsv ? "csv" : "json");
}

// Rows of the prepared table, split into train/test by the manifest.
struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Partition partition(const FeatureTable& table, const SplitManifest& split) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < table.vectors.size(); ++i) index[table.vectors[i].id] = i;
  auto lookup = [&](const std::vector<std::string>& ids) {
    std::vector<std::size_t> rows;
    rows.reserve(ids.size());
    for (const auto& id : ids) {
      const auto it = index.find(id);
      if (it == index.end()) throw InvalidArgument("split references unknown id '" + id + "'");
      rows.push_back(it->second);
    }
    return rows;
  };
  return {lookup(split.train_ids), lookup(split.test_ids)};
}

FeatureMatrix rows_matrix(const FeatureTable& table, const std::vector<std::size_t>& rows) {
  std::vector<FeatureVector> picked;
  picked.reserve(rows.size());
  for (std::size_t r : rows) picked.push_back(table.vectors[r]);
  return FeatureMatrix::from_vectors(picked);
}

std::vector<int> rows_labels(const FeatureTable& table, const std::vector<std::size_t>& rows,
                             LabelMode mode) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(class_index(table.labels[r], mode));
  return out;
}

struct Loaded {
  FeatureTable table;
  SplitManifest split;
  Partition part;
};

Loaded load_prepared(const RunConfig& config) {
  const fs::path features = config.out_dir / artifacts::kFeatures;
  const fs::path split_path = config.out_dir / artifacts::kSplit;
  if (!fs::exists(features) || !fs::exists(split_path)) {
    throw InvalidArgument(fmt::format("{} or {} missing in {}; run prepare first",
                                      artifacts::kFeatures, artifacts::kSplit,
                                      config.out_dir.string()));
  }
  Loaded loaded;
  loaded.table = load_features(features);
  loaded.split = load_split(split_path);
  loaded.part = partition(loaded.table, loaded.split);
  return loaded;
}

Forest load_model(const RunConfig& config) {
  const fs::path path = config.out_dir / artifacts::kModel;
  if (!fs::exists(path)) {
    throw InvalidArgument(fmt::format("{} missing in {}; run train first", artifacts::kModel,
                                      config.out_dir.string()));
  }
  return load_forest(path);
}

}  // namespace

PreparedData cmd_prepare(const RunConfig& config) {
  validate(config);
  LabeledDataset dataset;
  PreparedData prepared;
  std::string source;
  if (config.data.synth) {
    SynthDataset synth =
        synth_generate(*config.data.synth, config.data.synth_per_class, config.data.synth_seed);
    dataset = std::move(synth.data);
    prepared.signal_phase = std::move(synth.signal_phase);
    source = "synth";
  } else {
    dataset = load_manifest(*config.data.curves_dir, *config.data.labels, config.jobs);
    source = "files";
  }

  const auto& records = dataset.records();
  prepared.table.vectors.resize(records.size());
  prepared.table.labels.reserve(records.size());
  parallel_for(records.size(), config.jobs, [&](std::size_t i) {
    try {
      prepared.table.vectors[i] = prepare(records[i].curve, config.preprocess);
    } catch (const Error& e) {
      throw InvalidArgument(fmt::format("curve '{}': {}", records[i].curve.id, e.what()));
    }
  });
  for (const auto& record : records) prepared.table.labels.push_back(record.label);
  prepared.split = split(dataset, config.split_ratio, config.split_seed);

  fs::create_directories(config.out_dir);
  save_features(config.out_dir / artifacts::kFeatures, prepared.table);
  save_split(config.out_dir / artifacts::kSplit, prepared.split);

  json counts = json::object();
  for (const auto& [label, count] : dataset.class_counts()) counts[label.fine_token()] = count;
  json majors = json::object();
  for (const auto& [major, count] : dataset.major_counts()) {
    majors[std::string(major_token(major))] = count;
  }
  json signal = json::object();
  for (const auto& [label, phase] : prepared.signal_phase) {
    signal[label] = phase ? json(*phase) : json(nullptr);
  }
  write_json(config.out_dir / artifacts::kDataset,
             {{"source", source},
              {"n_records", dataset.size()},
              {"n_features", config.preprocess.window_len},
              {"class_counts", counts},
              {"major_counts", majors},
              {"signal_phase", signal},
              {"n_train", prepared.split.train_ids.size()},
              {"n_test", prepared.split.test_ids.size()}});
  return prepared;
}

TrainOutcome cmd_train(const RunConfig& config) {
  validate(config);
  const Loaded data = load_prepared(config);
  const auto names = class_names(config.label_mode);
  const FeatureMatrix x_train = rows_matrix(data.table, data.part.train);
  const auto y_train = rows_labels(data.table, data.part.train, config.label_mode);
  const FeatureMatrix x_test = rows_matrix(data.table, data.part.test);
  const auto y_test = rows_labels(data.table, data.part.test, config.label_mode);

  TrainOutcome outcome;
  Hyperparams hp = config.hyperparams;
  if (config.grid) {
    outcome.grid =
        grid_search(x_train, y_train, names, *config.grid, config.hyperparams, config.seed,
                    config.jobs);
    hp = outcome.grid->best;
  }
  outcome.forest = fit_forest(x_train, y_train, names, hp, config.seed, config.jobs);
  const auto predicted = predict(outcome.forest, x_test, config.jobs);
  outcome.confusion = confusion(y_test, predicted, names.size());
  outcome.metrics = summarize(outcome.confusion);

  save_forest(config.out_dir / artifacts::kModel, outcome.forest);

  if (config.format == TableFormat::kJson) {
    json cells = json::array();
    if (outcome.grid) {
      for (const auto& cell : outcome.grid->cells) cells.push_back(to_json(cell));
    }
    write_json(config.out_dir / table_name(artifacts::kCvReport, config.format),
               {{"grid", config.grid ? to_json(*config.grid) : json(nullptr)},
                {"selected", to_json(hp)},
                {"selected_index", outcome.grid ? json(outcome.grid->best_index) : json(nullptr)},
                {"cells", cells}});
  } else {
    std::string out =
        "n_estimators,max_depth,folds,mean_accuracy,std_accuracy,mean_precision,mean_recall,"
        "mean_f1,fold_accuracies,selected\n";
    if (outcome.grid) {
      for (std::size_t i = 0; i < outcome.grid->cells.size(); ++i) {
        const CvReport& cell = outcome.grid->cells[i];
        std::string folds;
        for (const auto& f : cell.folds) {
          folds += (folds.empty() ? "" : ";") + csv::format_double(f.accuracy);
        }
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", cell.hyperparams.n_estimators,
                           cell.hyperparams.max_depth.to_string(), cell.folds.size(),
                           csv::format_double(cell.mean.accuracy),
                           csv::format_double(cell.stddev.accuracy),
                           csv::format_double(cell.mean.precision),
                           csv::format_double(cell.mean.recall),
                           csv::format_double(cell.mean.f1), folds,
                           i == outcome.grid->best_index ? 1 : 0);
      }
    }
    csv::write_file(config.out_dir / table_name(artifacts::kCvReport, config.format), out);
  }

  json metrics = to_json(outcome.metrics, names);
  metrics["confusion"] = to_json(outcome.confusion);
  metrics["class_names"] = names;
  metrics["n_train"] = data.part.train.size();
  metrics["n_test"] = data.part.test.size();
  metrics["hyperparams"] = to_json(hp);
  metrics["seed"] = config.seed;
  metrics["grid_searched"] = config.grid.has_value();
  write_json(config.out_dir / artifacts::kMetrics, metrics);
  csv::write_file(config.out_dir / artifacts::kConfusion,
                  render_confusion(outcome.confusion, names));
  return outcome;
}

ExplainOutcome cmd_explain(const RunConfig& config, const std::vector<std::string>& instance_ids) {
  validate(config);
  const Loaded data = load_prepared(config);
  const Forest forest = load_model(config);

  std::vector<std::size_t> rows;
  if (!instance_ids.empty()) {
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < data.table.vectors.size(); ++i) {
      index[data.table.vectors[i].id] = i;
    }
    for (const auto& id : instance_ids) {
      const auto it = index.find(id);
      if (it == index.end()) {
        throw InvalidArgument(fmt::format("unknown instance id '{}' ({} known ids)", id,
                                          index.size()));
      }
      rows.push_back(it->second);
    }
  } else if (config.summary_scope == SummaryScope::kTest) {
    rows = data.part.test;
  } else {
    rows.resize(data.table.vectors.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  }

  std::vector<FeatureVector> batch;
  batch.reserve(rows.size());
  for (std::size_t r : rows) batch.push_back(data.table.vectors[r]);

  ExplainOutcome outcome;
  outcome.attributions = explain_batch(forest, batch, config.class_policy, config.jobs);
  const std::size_t per_instance =
      batch.empty() ? 0 : outcome.attributions.size() / batch.size();

  std::ostringstream attributions_csv;
  write_attributions_csv(attributions_csv, outcome.attributions);
  csv::write_file(config.out_dir / artifacts::kAttributions, attributions_csv.str());

  const PhaseSlices slices = slice(forest.n_features, config.boundaries);
  bool any_sub = false;
  for (std::size_t r : rows) any_sub = any_sub || data.table.labels[r].sub().has_value();

  std::string importance_csv = "id,label,class_index,I1,I2,I3,I4,w1,w2,w3,w4,top_phase\n";
  std::vector<std::size_t> render_index(batch.size(), 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const QualityLabel& label = data.table.labels[rows[i]];
    const int predicted = predict(forest, batch[i].values);
    for (std::size_t k = 0; k < per_instance; ++k) {
      const std::size_t a = i * per_instance + k;
      const Attribution& attribution = outcome.attributions[a];
      const PhaseImportance imp = phase_importance(slices, attribution);
      if (attribution.class_index == predicted || per_instance == 1) {
        if (config.class_policy.policy != ClassPolicy::kAll || attribution.class_index == predicted) {
          render_index[i] = a;
        }
      }
      std::string suffix;
      if (config.class_policy.policy == ClassPolicy::kAll) {
        suffix = "@" + forest.class_names[static_cast<std::size_t>(attribution.class_index)];
      }
      outcome.importances.push_back({label.major_token() + suffix, imp});
      if (any_sub && label.sub()) outcome.importances.push_back({label.fine_token() + suffix, imp});
      importance_csv += fmt::format("{},{},{}", batch[i].id, label.fine_token(),
                                    attribution.class_index);
      for (double v : imp.importance) importance_csv += "," + csv::format_double(v);
      for (double v : imp.weights) importance_csv += "," + csv::format_double(v);
      importance_csv += fmt::format(",{}\n", imp.top_phase);
    }
  }
  csv::write_file(config.out_dir / artifacts::kPhaseImportance, importance_csv);

  if (!outcome.importances.empty()) {
    std::vector<std::string> labels;
    std::vector<std::string> bases{"OK", "MISSING_STRANDS"};
    if (any_sub) {
      for (int s = 1; s <= 3; ++s) bases.push_back(fmt::format("MISSING_STRANDS_{}", s));
    }
    bases.push_back("CRIMPED_INSULATION");
    if (config.class_policy.policy == ClassPolicy::kAll) {
      for (const auto& base : bases) {
        for (const auto& name : forest.class_names) labels.push_back(base + "@" + name);
      }
    } else {
      labels = bases;
    }
    outcome.summary = class_phase_summary(outcome.importances, labels);
    write_json(config.out_dir / (std::string(artifacts::kPhaseSummary) + ".json"),
               to_json(outcome.summary));
    if (config.format == TableFormat::kCsv) {
      std::ostringstream summary_csv;
      write_phase_summary_csv(summary_csv, outcome.summary);
      csv::write_file(config.out_dir / (std::string(artifacts::kPhaseSummary) + ".csv"),
                      summary_csv.str());
    }
  }

  const std::size_t n_svg = std::min(config.svg_limit, batch.size());
  for (std::size_t i = 0; i < n_svg; ++i) {
    const Attribution& attribution = outcome.attributions[render_index[i]];
    const PhaseImportance imp = phase_importance(slices, attribution);
    RenderSpec spec;
    spec.curve = batch[i];
    spec.weights = imp.weights;
    spec.predicted = forest.class_names[static_cast<std::size_t>(predict(forest, batch[i].values))];
    spec.top_phase = imp.top_phase;
    spec.boundaries = config.boundaries;
    csv::write_file(config.out_dir / artifacts::kSvgDir / (batch[i].id + ".svg"),
                    render_svg(spec));
  }
  outcome.svg_count = n_svg;

  if (config.expert_ratings) {
    const auto ratings = load_expert_ratings(*config.expert_ratings);
    std::map<std::string, std::array<double, 4>> means;
    for (const auto& row : outcome.summary.rows) {
      std::array<double, 4> m{};
      for (std::size_t p = 0; p < 4; ++p) m[p] = row.phases[p].mean;
      means[row.label] = m;
    }
    std::set<std::string> rated;
    for (const auto& r : ratings) rated.insert(r.quality_class);
    std::vector<std::string> classes;
    for (const auto& cls : rated) {
      if (means.count(cls)) classes.push_back(cls);
    }
    outcome.agreement = expert_agreement(means, ratings, classes);
    write_json(config.out_dir / artifacts::kExpertAgreement, to_json(outcome.agreement));
  }
  return outcome;
}

namespace {

// Count-weighted mean phase importance over the fault classes of a stored
// phase summary, if one exists.
std::optional<std::array<double, 4>> fault_class_importance(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  const json summary = read_json(path);
  std::array<double, 4> sum{};
  double count = 0.0;
  for (const auto& row : summary.at("classes")) {
    const auto label = row.at("class").get<std::string>();
    if (label != "MISSING_STRANDS" && label != "CRIMPED_INSULATION") continue;
    const double n = row.at("count").get<double>();
    for (std::size_t p = 0; p < 4; ++p) {
      sum[p] += n * row.at("phases").at(p).at("mean").get<double>();
    }
    count += n;
  }
  if (count == 0.0) return std::nullopt;
  for (double& v : sum) v /= count;
  return sum;
}

}  // namespace

SelectivityStudy cmd_selectivity(const RunConfig& config) {
  validate(config);
  const Loaded data = load_prepared(config);
  const Forest base = load_model(config);
  const auto names = class_names(config.label_mode);
  const FeatureMatrix x_train = rows_matrix(data.table, data.part.train);
  const auto y_train = rows_labels(data.table, data.part.train, config.label_mode);
  const FeatureMatrix x_test = rows_matrix(data.table, data.part.test);
  const auto y_test = rows_labels(data.table, data.part.test, config.label_mode);

  std::vector<PerturbationPlan> plans;
  for (const auto& plan : enumerate_plans(config.random_seed)) {
    if (std::find(config.strategies.begin(), config.strategies.end(), plan.strategy.kind) !=
        config.strategies.end()) {
      plans.push_back(plan);
    }
  }
  const SelectivityStudy study =
      run_selectivity(x_train, y_train, x_test, y_test, names, base.hyperparams,
                      config.boundaries, plans, config.seed, config.jobs);

  if (config.format == TableFormat::kCsv) {
    std::ostringstream out;
    write_selectivity_csv(out, study);
    csv::write_file(config.out_dir / table_name(artifacts::kSelectivity, config.format), out.str());
  } else {
    write_json(config.out_dir / table_name(artifacts::kSelectivity, config.format),
               to_json(study));
  }
  const auto importance = fault_class_importance(
      config.out_dir / (std::string(artifacts::kPhaseSummary) + ".json"));
  csv::write_file(config.out_dir / artifacts::kSelectivityTables,
                  render_selectivity_tables(
                      selectivity_report(study, config.boundaries, importance)));
  return study;
}

EmitResult cmd_report(const RunConfig& config) {
  validate(config);
  fs::create_directories(config.out_dir);
  write_json(config.out_dir / artifacts::kConfigSnapshot, to_json(config));
  cmd_prepare(config);
  cmd_train(config);
  cmd_explain(config);
  if (config.selectivity) cmd_selectivity(config);
  return index_directory(config.out_dir);
}

}  // namespace crimpxai
