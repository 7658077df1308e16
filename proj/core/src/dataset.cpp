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

#include "crimpxai/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "crimpxai/csv.hpp"
#include "crimpxai/error.hpp"
#include "crimpxai/parallel.hpp"
#include "crimpxai/random.hpp"

namespace crimpxai {

namespace fs = std::filesystem;

QualityLabel QualityLabel::missing_strands(std::optional<int> strands) {
  if (strands && (*strands < 1 || *strands > 3)) {
    throw InvalidArgument(
        fmt::format("missing strand count must be 1..3, got {}", *strands));
  }
  return QualityLabel(MajorClass::kMissingStrands, strands);
}

QualityLabel QualityLabel::parse(std::string_view major, std::string_view sub) {
  major = csv::trim(major);
  sub = csv::trim(sub);
  if (major == "OK" || major == "CRIMPED_INSULATION") {
    if (!sub.empty()) {
      throw InvalidArgument(fmt::format(
          "label {} does not take a strand count (got '{}')", major, sub));
    }
    return major == "OK" ? ok() : crimped_insulation();
  }
  if (major == "MISSING_STRANDS") {
    if (sub.empty()) return missing_strands();
    const auto count = csv::parse_int(sub);
    if (!count || *count < 1 || *count > 3) {
      throw InvalidArgument(
          fmt::format("unknown strand count '{}' (expected 1, 2 or 3)", sub));
    }
    return missing_strands(static_cast<int>(*count));
  }
  throw InvalidArgument(fmt::format("unknown label token '{}'", major));
}

std::string_view major_token(MajorClass major) {
  switch (major) {
    case MajorClass::kOk:
      return "OK";
    case MajorClass::kMissingStrands:
      return "MISSING_STRANDS";
    case MajorClass::kCrimpedInsulation:
      return "CRIMPED_INSULATION";
  }
  return "?";
}

std::string QualityLabel::major_token() const {
  return std::string(crimpxai::major_token(major_));
}

std::string QualityLabel::fine_token() const {
  if (sub_) return fmt::format("{}_{}", major_token(), *sub_);
  return major_token();
}

std::vector<std::string> class_names(LabelMode mode) {
  if (mode == LabelMode::kMajor) {
    return {"OK", "MISSING_STRANDS", "CRIMPED_INSULATION"};
  }
  return {"OK", "MISSING_STRANDS_1", "MISSING_STRANDS_2", "MISSING_STRANDS_3",
          "CRIMPED_INSULATION"};
}

int class_index(const QualityLabel& label, LabelMode mode) {
  switch (label.major()) {
    case MajorClass::kOk:
      return 0;
    case MajorClass::kMissingStrands:
      if (mode == LabelMode::kMajor) return 1;
      if (!label.sub()) {
        throw InvalidArgument(
            "fine label mode requires a strand count for MISSING_STRANDS");
      }
      return *label.sub();
    case MajorClass::kCrimpedInsulation:
      return mode == LabelMode::kMajor ? 2 : 4;
  }
  return 0;
}

LabeledDataset::LabeledDataset(std::vector<LabeledCurve> records)
    : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const RawCurve& curve = records_[i].curve;
    if (curve.samples.empty()) {
      throw InvalidArgument(fmt::format("curve '{}' has no samples", curve.id));
    }
    for (double v : curve.samples) {
      if (!std::isfinite(v)) {
        throw InvalidArgument(
            fmt::format("curve '{}' contains a non-finite sample", curve.id));
      }
    }
    if (!index_.emplace(curve.id, i).second) {
      throw InvalidArgument(fmt::format("duplicate curve id '{}'", curve.id));
    }
    ++class_counts_[records_[i].label];
  }
}

std::map<MajorClass, std::size_t> LabeledDataset::major_counts() const {
  std::map<MajorClass, std::size_t> counts;
  for (const auto& [label, count] : class_counts_) counts[label.major()] += count;
  return counts;
}

std::optional<std::size_t> LabeledDataset::find(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

RawCurve parse_curve(std::string_view text, std::string id,
                     std::string_view source_name) {
  RawCurve curve;
  curve.id = std::move(id);
  const auto rows = csv::lines(text);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string_view row = csv::trim(rows[i]);
    if (row.empty()) continue;
    if (i == 0 && row == "force") continue;
    const auto value = csv::parse_double(row);
    if (!value) {
      throw ParseError(fmt::format("{}:{}: malformed force value '{}'",
                                   source_name, i + 1, row));
    }
    curve.samples.push_back(*value);
  }
  if (curve.samples.empty()) {
    throw ParseError(fmt::format("{}: empty curve file", source_name));
  }
  return curve;
}

RawCurve load_curve(const fs::path& path, std::optional<std::string> id_override) {
  std::string id = id_override ? *id_override : path.stem().string();
  return parse_curve(csv::read_file(path), std::move(id), path.string());
}

void save_curve(const fs::path& path, const RawCurve& curve) {
  std::string out = "force\n";
  for (double v : curve.samples) {
    out += csv::format_double(v);
    out += '\n';
  }
  csv::write_file(path, out);
}

namespace {

std::map<std::string, QualityLabel> load_labels(const fs::path& path) {
  const std::string text = csv::read_file(path);
  const auto rows = csv::lines(text);
  std::map<std::string, QualityLabel> labels;
  bool header_seen = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string_view row = csv::trim(rows[i]);
    if (row.empty()) continue;
    const auto fields = csv::split(row);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() >= 2 && fields[0] == "id" && fields[1] == "major") {
        continue;
      }
      throw ParseError(fmt::format("{}:{}: expected header 'id,major,sub'",
                                   path.string(), i + 1));
    }
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
      throw ParseError(fmt::format("{}:{}: expected 'id,major,sub'",
                                   path.string(), i + 1));
    }
    QualityLabel label;
    try {
      label = QualityLabel::parse(fields[1], fields.size() == 3 ? fields[2] : "");
    } catch (const InvalidArgument& e) {
      throw ParseError(
          fmt::format("{}:{}: {}", path.string(), i + 1, e.what()));
    }
    if (!labels.emplace(std::string(fields[0]), label).second) {
      throw ParseError(fmt::format("{}:{}: duplicate id '{}'", path.string(),
                                   i + 1, fields[0]));
    }
  }
  return labels;
}

}  // namespace

LabeledDataset load_manifest(const fs::path& dir, const fs::path& labels_path,
                             int jobs) {
  if (!fs::is_directory(dir)) {
    throw IoError("curve directory does not exist: " + dir.string());
  }
  const auto labels = load_labels(labels_path);

  std::error_code ec;
  const fs::path labels_canonical = fs::weakly_canonical(labels_path, ec);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    if (fs::weakly_canonical(entry.path(), ec) == labels_canonical) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<RawCurve> curves(files.size());
  parallel_for(files.size(), jobs,
               [&](std::size_t i) { curves[i] = load_curve(files[i]); });

  std::vector<std::string> unlabeled;
  std::vector<LabeledCurve> records;
  records.reserve(curves.size());
  for (auto& curve : curves) {
    const auto it = labels.find(curve.id);
    if (it == labels.end()) {
      unlabeled.push_back(curve.id);
      continue;
    }
    records.push_back({std::move(curve), it->second});
  }
  if (!unlabeled.empty()) {
    std::string ids;
    for (const auto& id : unlabeled) ids += (ids.empty() ? "" : ", ") + id;
    throw InvalidArgument(fmt::format("{} curve(s) without label in {}: {}",
                                      unlabeled.size(), labels_path.string(),
                                      ids));
  }
  return LabeledDataset(std::move(records));
}

void save_manifest(const LabeledDataset& dataset, const fs::path& dir,
                   const fs::path& labels) {
  std::string out = "id,major,sub\n";
  for (const auto& record : dataset.records()) {
    save_curve(dir / (record.curve.id + ".csv"), record.curve);
    const auto sub = record.label.sub();
    out += fmt::format("{},{},{}\n", record.curve.id,
                       record.label.major_token(),
                       sub ? std::to_string(*sub) : std::string());
  }
  csv::write_file(labels, out);
}

SplitManifest split(const LabeledDataset& dataset, double ratio,
                    std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidArgument(fmt::format("split ratio must be in (0,1), got {}", ratio));
  }
  const std::size_t n = dataset.size();
  if (n < 2) {
    throw InvalidArgument(
        fmt::format("split needs at least 2 records, got {}", n));
  }
  auto n_train = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(n) + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<bool> is_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) is_train[order[i]] = true;

  SplitManifest manifest;
  manifest.seed = seed;
  manifest.ratio = ratio;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& id = dataset.records()[i].curve.id;
    (is_train[i] ? manifest.train_ids : manifest.test_ids).push_back(id);
  }
  return manifest;
}

nlohmann::json to_json(const SplitManifest& manifest) {
  return {{"seed", manifest.seed},
          {"ratio", manifest.ratio},
          {"train_ids", manifest.train_ids},
          {"test_ids", manifest.test_ids}};
}

SplitManifest split_manifest_from_json(const nlohmann::json& json) {
  SplitManifest manifest;
  try {
    manifest.seed = json.at("seed").get<std::uint64_t>();
    manifest.ratio = json.at("ratio").get<double>();
    manifest.train_ids = json.at("train_ids").get<std::vector<std::string>>();
    manifest.test_ids = json.at("test_ids").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("split manifest: ") + e.what());
  }
  std::set<std::string> seen(manifest.train_ids.begin(), manifest.train_ids.end());
  for (const auto& id : manifest.test_ids) {
    if (seen.count(id)) {
      throw ParseError("split manifest: id '" + id + "' in both train and test");
    }
  }
  return manifest;
}

void save_split(const fs::path& path, const SplitManifest& manifest) {
  csv::write_file(path, to_json(manifest).dump(2) + "\n");
}

SplitManifest load_split(const fs::path& path) {
  try {
    return split_manifest_from_json(nlohmann::json::parse(csv::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

SynthSpec SynthSpec::three_class(int signal_phase, double noise) {
  SynthSpec spec;
  spec.noise = noise;
  spec.classes = {
      {QualityLabel::ok(), std::nullopt, 0.0, 0.5, 12.0},
      {QualityLabel::missing_strands(), signal_phase, -0.12, 0.5, 12.0},
      {QualityLabel::crimped_insulation(), signal_phase, 0.12, 0.5, 12.0},
  };
  return spec;
}

namespace {

void validate(const SynthSpec& spec) {
  if (spec.classes.empty()) throw InvalidArgument("synth spec has no classes");
  if (spec.length == 0) throw InvalidArgument("synth length must be positive");
  std::size_t previous = 0;
  for (std::size_t end : spec.phase_ends) {
    if (end <= previous) {
      throw InvalidArgument("synth phase ends must be strictly increasing");
    }
    previous = end;
  }
  if (spec.phase_ends[3] != spec.length) {
    throw InvalidArgument("last synth phase end must equal the curve length");
  }
  if (!(spec.noise >= 0.0)) throw InvalidArgument("synth noise must be >= 0");
  for (const auto& cls : spec.classes) {
    if (cls.distortion_phase &&
        (*cls.distortion_phase < 1 || *cls.distortion_phase > 4)) {
      throw InvalidArgument(fmt::format(
          "distortion phase must be in 1..4, got {}", *cls.distortion_phase));
    }
    if (!(cls.width > 0.0)) throw InvalidArgument("bump width must be > 0");
  }
}

}  // namespace

std::vector<double> synth_template(const SynthSpec& spec) {
  validate(spec);
  const auto& e = spec.phase_ends;
  const auto& s = spec.shape;
  std::vector<double> curve(spec.length);
  for (std::size_t i = 0; i < spec.length; ++i) {
    const double x = static_cast<double>(i);
    double value = 0.0;
    if (i < e[0]) {
      value = s.centring_level * x / static_cast<double>(e[0]);
    } else if (i < e[1]) {
      const double t = (x - e[0]) / static_cast<double>(e[1] - e[0]);
      value = s.centring_level + (s.rolling_level - s.centring_level) * t;
    } else if (i < e[2]) {
      const double span = static_cast<double>(e[2] - e[1] - 1);
      const double t = span > 0 ? (x - e[1]) / span : 1.0;
      value = s.rolling_level + (s.peak_level - s.rolling_level) * t * t;
    } else {
      const double t = (x - e[2] + 1) / static_cast<double>(e[3] - e[2]);
      value = s.springback_floor +
              (s.peak_level - s.springback_floor) * std::exp(-8.0 * t);
    }
    curve[i] = value;
  }
  return curve;
}

SynthDataset synth_generate(const SynthSpec& spec, std::size_t n_per_class,
                            std::uint64_t seed) {
  validate(spec);
  if (n_per_class == 0) throw InvalidArgument("n_per_class must be positive");
  const std::vector<double> base = synth_template(spec);

  SynthDataset out;
  std::vector<LabeledCurve> records;
  records.reserve(spec.classes.size() * n_per_class);
  Rng rng(seed);
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const SynthClassSpec& cls = spec.classes[c];
    std::vector<double> shaped = base;
    if (cls.distortion_phase) {
      const int p = *cls.distortion_phase;
      const std::size_t begin = p == 1 ? 0 : spec.phase_ends[p - 2];
      const std::size_t end = spec.phase_ends[p - 1];
      const double center =
          static_cast<double>(begin) +
          cls.center_fraction * static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const double z = (static_cast<double>(i) - center) / cls.width;
        shaped[i] += cls.amplitude * std::exp(-0.5 * z * z);
      }
    }
    out.signal_phase[cls.label.fine_token()] = cls.distortion_phase;
    for (std::size_t n = 0; n < n_per_class; ++n) {
      RawCurve curve;
      curve.id = fmt::format("synth_c{}_{:05d}", c, n);
      curve.samples.resize(spec.length);
      for (std::size_t i = 0; i < spec.length; ++i) {
        const double noise = spec.noise > 0.0 ? spec.noise * rng.normal() : 0.0;
        curve.samples[i] = std::max(0.0, shaped[i] + noise);
      }
      curve.source_meta["generator"] = "synth";
      records.push_back({std::move(curve), cls.label});
    }
  }
  out.data = LabeledDataset(std::move(records));
  return out;
}

nlohmann::json to_json(const SynthSpec& spec) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& cls : spec.classes) {
    nlohmann::json entry = {{"major", cls.label.major_token()},
                            {"amplitude", cls.amplitude},
                            {"center_fraction", cls.center_fraction},
                            {"width", cls.width}};
    entry["sub"] = cls.label.sub() ? std::to_string(*cls.label.sub()) : "";
    entry["distortion_phase"] = cls.distortion_phase
                                    ? nlohmann::json(*cls.distortion_phase)
                                    : nlohmann::json(nullptr);
    classes.push_back(std::move(entry));
  }
  return {{"classes", classes},
          {"noise", spec.noise},
          {"length", spec.length},
          {"phase_ends", spec.phase_ends},
          {"shape",
           {{"centring_level", spec.shape.centring_level},
            {"rolling_level", spec.shape.rolling_level},
            {"peak_level", spec.shape.peak_level},
            {"springback_floor", spec.shape.springback_floor}}}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& json) {
  SynthSpec spec;
  try {
    if (json.contains("signal_phase")) {
      spec = SynthSpec::three_class(json.at("signal_phase").get<int>(),
                                    json.value("noise", spec.noise));
    }
    spec.noise = json.value("noise", spec.noise);
    spec.length = json.value("length", spec.length);
    if (json.contains("phase_ends")) {
      spec.phase_ends = json.at("phase_ends").get<std::array<std::size_t, 4>>();
    }
    if (json.contains("shape")) {
      const auto& shape = json.at("shape");
      spec.shape.centring_level = shape.value("centring_level", spec.shape.centring_level);
      spec.shape.rolling_level = shape.value("rolling_level", spec.shape.rolling_level);
      spec.shape.peak_level = shape.value("peak_level", spec.shape.peak_level);
      spec.shape.springback_floor =
          shape.value("springback_floor", spec.shape.springback_floor);
    }
    if (json.contains("classes")) {
      spec.classes.clear();
      for (const auto& entry : json.at("classes")) {
        SynthClassSpec cls;
        cls.label = QualityLabel::parse(entry.at("major").get<std::string>(),
                                        entry.value("sub", std::string()));
        if (entry.contains("distortion_phase") &&
            !entry.at("distortion_phase").is_null()) {
          cls.distortion_phase = entry.at("distortion_phase").get<int>();
        }
        cls.amplitude = entry.value("amplitude", 0.0);
        cls.center_fraction = entry.value("center_fraction", 0.5);
        cls.width = entry.value("width", 12.0);
        spec.classes.push_back(cls);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synth spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

}  // namespace crimpxai
