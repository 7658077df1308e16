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

#ifndef CRIMPXAI_DATASET_HPP_
#define CRIMPXAI_DATASET_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace crimpxai {

// One recorded crimp stroke: force readings in sensor units, in file order.
struct RawCurve {
  std::string id;
  std::vector<double> samples;
  std::map<std::string, std::string> source_meta;

  friend bool operator==(const RawCurve&, const RawCurve&) = default;
};

enum class MajorClass { kOk = 0, kMissingStrands = 1, kCrimpedInsulation = 2 };

// Quality class of a crimp connection. The strand count is only meaningful
// (and only allowed) for missing-strand defects.
class QualityLabel {
 public:
  QualityLabel() = default;

  static QualityLabel ok() { return QualityLabel(MajorClass::kOk, {}); }
  static QualityLabel missing_strands(std::optional<int> strands = {});
  static QualityLabel crimped_insulation() {
    return QualityLabel(MajorClass::kCrimpedInsulation, {});
  }

  // Parses the labels-file tokens, e.g. ("MISSING_STRANDS", "2").
  static QualityLabel parse(std::string_view major, std::string_view sub);

  MajorClass major() const { return major_; }
  std::optional<int> sub() const { return sub_; }

  // Token of the major class: OK, MISSING_STRANDS or CRIMPED_INSULATION.
  std::string major_token() const;
  // Major token, suffixed with the strand count when present
  // (MISSING_STRANDS_2).
  std::string fine_token() const;

  friend auto operator<=>(const QualityLabel&, const QualityLabel&) = default;

 private:
  QualityLabel(MajorClass major, std::optional<int> sub)
      : major_(major), sub_(sub) {}

  MajorClass major_ = MajorClass::kOk;
  std::optional<int> sub_;
};

std::string_view major_token(MajorClass major);

// Granularity used when labels become class indices.
enum class LabelMode {
  kMajor,  // OK, MISSING_STRANDS, CRIMPED_INSULATION
  kFine,   // OK, MISSING_STRANDS_1..3, CRIMPED_INSULATION
};

std::vector<std::string> class_names(LabelMode mode);
// Throws InvalidArgument for a missing-strand label without strand count in
// fine mode.
int class_index(const QualityLabel& label, LabelMode mode);

struct LabeledCurve {
  RawCurve curve;
  QualityLabel label;
};

// Immutable collection of labeled curves with unique ids.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  // Throws InvalidArgument on duplicate ids, empty or non-finite curves.
  explicit LabeledDataset(std::vector<LabeledCurve> records);

  const std::vector<LabeledCurve>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Count per full label (major + strand count).
  const std::map<QualityLabel, std::size_t>& class_counts() const {
    return class_counts_;
  }
  std::map<MajorClass, std::size_t> major_counts() const;

  // Index of the record with `id`, if present.
  std::optional<std::size_t> find(std::string_view id) const;

 private:
  std::vector<LabeledCurve> records_;
  std::map<QualityLabel, std::size_t> class_counts_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Reads one curve file: one force value per line, optional header "force".
// The id is the filename stem unless `id_override` is given.
RawCurve load_curve(const std::filesystem::path& path,
                    std::optional<std::string> id_override = {});
RawCurve parse_curve(std::string_view text, std::string id,
                     std::string_view source_name);
void save_curve(const std::filesystem::path& path, const RawCurve& curve);

// Loads every *.csv in `dir` (sorted by file name) and labels them from the
// `id,major,sub` labels file. Label rows without a curve file are ignored.
LabeledDataset load_manifest(const std::filesystem::path& dir,
                             const std::filesystem::path& labels,
                             int jobs = 1);
// Writes curves as <dir>/<id>.csv and the labels file.
void save_manifest(const LabeledDataset& dataset,
                   const std::filesystem::path& dir,
                   const std::filesystem::path& labels);

struct SplitManifest {
  std::uint64_t seed = 0;
  double ratio = 0.8;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

// Uniform random split: ids are permuted with the seeded stream and the first
// floor(ratio * N) go to training (clamped to [1, N-1]). Both id lists keep
// dataset order.
SplitManifest split(const LabeledDataset& dataset, double ratio,
                    std::uint64_t seed);

nlohmann::json to_json(const SplitManifest& manifest);
SplitManifest split_manifest_from_json(const nlohmann::json& json);
void save_split(const std::filesystem::path& path,
                const SplitManifest& manifest);
SplitManifest load_split(const std::filesystem::path& path);

// Shape of the base curve used by the synthetic generator. Levels are the
// force values reached at the end of each phase.
struct SynthTemplate {
  double centring_level = 0.08;
  double rolling_level = 0.35;
  double peak_level = 1.0;
  double springback_floor = 0.0;
};

// Per-class distortion: a Gaussian bump truncated to one phase.
struct SynthClassSpec {
  QualityLabel label;
  std::optional<int> distortion_phase;  // 1..4, none for the reference class
  double amplitude = 0.0;
  double center_fraction = 0.5;  // bump centre as fraction of the phase
  double width = 12.0;           // bump standard deviation in samples
};

struct SynthSpec {
  std::vector<SynthClassSpec> classes;
  SynthTemplate shape;
  double noise = 0.01;  // standard deviation of i.i.d. Gaussian noise
  std::size_t length = 500;
  std::array<std::size_t, 4> phase_ends{75, 150, 345, 500};

  // OK reference plus missing-strand (negative bump) and crimped-insulation
  // (positive bump) classes, both distorted in `signal_phase`.
  static SynthSpec three_class(int signal_phase, double noise = 0.01);
};

struct SynthDataset {
  LabeledDataset data;
  // Ground-truth signal phase per label (fine token); nullopt for classes
  // without distortion.
  std::map<std::string, std::optional<int>> signal_phase;
};

// Noise-free template curve of spec.length samples.
std::vector<double> synth_template(const SynthSpec& spec);

// n_per_class curves per class: template + phase-local bump + noise, clipped
// to be nonnegative.
SynthDataset synth_generate(const SynthSpec& spec, std::size_t n_per_class,
                            std::uint64_t seed);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& json);

}  // namespace crimpxai

#endif  // CRIMPXAI_DATASET_HPP_
