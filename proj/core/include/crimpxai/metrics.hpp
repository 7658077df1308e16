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

#ifndef CRIMPXAI_METRICS_HPP_
#define CRIMPXAI_METRICS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace crimpxai {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes = 0)
      : n_(n_classes), counts_(n_classes * n_classes, 0) {}

  std::size_t n_classes() const { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1) {
    counts_[truth * n_ + predicted] += count;
  }

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_total(std::size_t truth) const;
  std::uint64_t column_total(std::size_t predicted) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

// Throws InvalidArgument on length mismatch or a label outside [0, n_classes).
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t n_classes);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsSummary {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
  // Zero-denominator notes, e.g. a class that was never predicted.
  std::vector<std::string> warnings;
};

// Macro metrics are unweighted means of per-class scores; empty denominators
// score 0 and add a warning. Throws InvalidArgument on an empty matrix.
MetricsSummary summarize(const ConfusionMatrix& matrix);

std::string render_confusion(const ConfusionMatrix& matrix,
                             std::span<const std::string> class_names);

nlohmann::json to_json(const ConfusionMatrix& matrix);
nlohmann::json to_json(const MetricsSummary& summary,
                       std::span<const std::string> class_names);

// 0..3 score per phase given by one process expert for one quality class.
struct ExpertRating {
  std::string rater;
  std::string quality_class;
  std::array<int, 4> scores{};
};

// CSV with header rater,class,p1,p2,p3,p4.
std::vector<ExpertRating> load_expert_ratings(const std::filesystem::path& path);
std::vector<ExpertRating> parse_expert_ratings(std::string_view text,
                                               std::string_view source_name);

struct RaterAgreement {
  std::string rater;
  std::vector<int> top_phases;  // all phases sharing the maximal score
  bool top_phase_match = false;
  // Spearman correlation between normalized importance and ratings;
  // undefined when either side is constant.
  std::optional<double> rank_correlation;
};

struct ClassAgreement {
  std::string quality_class;
  std::array<double, 4> importance{};
  std::array<double, 4> normalized{};
  int model_top_phase = 1;
  std::vector<RaterAgreement> raters;
};

// Compares the model's per-class mean phase importance against expert
// ratings for each class in `classes`. Throws InvalidArgument if a class has
// no importance entry or no ratings.
std::vector<ClassAgreement> expert_agreement(
    const std::map<std::string, std::array<double, 4>>& class_importance,
    std::span<const ExpertRating> ratings, std::span<const std::string> classes);

nlohmann::json to_json(const std::vector<ClassAgreement>& agreement);

// Spearman rank correlation with average ranks for ties.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

}  // namespace crimpxai

#endif  // CRIMPXAI_METRICS_HPP_
