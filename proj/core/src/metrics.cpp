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

#include "crimpxai/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "crimpxai/csv.hpp"
#include "crimpxai/error.hpp"

namespace crimpxai {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < n_; ++i) sum += at(i, i);
  return sum;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::uint64_t sum = 0;
  for (std::size_t j = 0; j < n_; ++j) sum += at(truth, j);
  return sum;
}

std::uint64_t ConfusionMatrix::column_total(std::size_t predicted) const {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < n_; ++i) sum += at(i, predicted);
  return sum;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::size_t n_classes) {
  if (y_true.size() != y_pred.size()) {
    throw InvalidArgument(fmt::format("confusion: {} true labels vs {} predictions",
                                      y_true.size(), y_pred.size()));
  }
  ConfusionMatrix matrix(n_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
        static_cast<std::size_t>(p) >= n_classes) {
      throw InvalidArgument(fmt::format(
          "confusion: label pair ({}, {}) outside [0, {})", t, p, n_classes));
    }
    matrix.add(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return matrix;
}

MetricsSummary summarize(const ConfusionMatrix& matrix) {
  const std::uint64_t total = matrix.total();
  if (total == 0) throw InvalidArgument("summarize: confusion matrix is empty");
  MetricsSummary out;
  const std::size_t n = matrix.n_classes();
  out.accuracy = static_cast<double>(matrix.trace()) / static_cast<double>(total);
  out.per_class.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double tp = static_cast<double>(matrix.at(c, c));
    const std::uint64_t predicted = matrix.column_total(c);
    const std::uint64_t actual = matrix.row_total(c);
    ClassScores& s = out.per_class[c];
    if (predicted == 0) {
      out.warnings.push_back(fmt::format("class {} never predicted; precision set to 0", c));
    } else {
      s.precision = tp / static_cast<double>(predicted);
    }
    if (actual == 0) {
      out.warnings.push_back(fmt::format("class {} has no true instances; recall set to 0", c));
    } else {
      s.recall = tp / static_cast<double>(actual);
    }
    s.f1 = s.precision + s.recall > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    out.macro_precision += s.precision;
    out.macro_recall += s.recall;
    out.macro_f1 += s.f1;
  }
  if (n > 0) {
    out.macro_precision /= static_cast<double>(n);
    out.macro_recall /= static_cast<double>(n);
    out.macro_f1 /= static_cast<double>(n);
  }
  return out;
}

std::string render_confusion(const ConfusionMatrix& matrix,
                             std::span<const std::string> class_names) {
  const std::size_t n = matrix.n_classes();
  auto name = [&](std::size_t i) {
    return i < class_names.size() ? class_names[i] : std::to_string(i);
  };
  std::size_t width = 10;
  for (std::size_t i = 0; i < n; ++i) width = std::max(width, name(i).size());
  std::string out = fmt::format("{:<{}}", "true\\pred", width);
  for (std::size_t j = 0; j < n; ++j) out += fmt::format(" {:>{}}", name(j), width);
  out += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out += fmt::format("{:<{}}", name(i), width);
    for (std::size_t j = 0; j < n; ++j) out += fmt::format(" {:>{}}", matrix.at(i, j), width);
    out += '\n';
  }
  out += fmt::format("total {}\n", matrix.total());
  return out;
}

nlohmann::json to_json(const ConfusionMatrix& matrix) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < matrix.n_classes(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < matrix.n_classes(); ++j) row.push_back(matrix.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const MetricsSummary& summary,
                       std::span<const std::string> class_names) {
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t c = 0; c < summary.per_class.size(); ++c) {
    const std::string key = c < class_names.size() ? class_names[c] : std::to_string(c);
    per_class[key] = {{"precision", summary.per_class[c].precision},
                      {"recall", summary.per_class[c].recall},
                      {"f1", summary.per_class[c].f1}};
  }
  return {{"accuracy", summary.accuracy},
          {"macro_precision", summary.macro_precision},
          {"macro_recall", summary.macro_recall},
          {"macro_f1", summary.macro_f1},
          {"per_class", per_class},
          {"warnings", summary.warnings}};
}

std::vector<ExpertRating> parse_expert_ratings(std::string_view text,
                                               std::string_view source_name) {
  std::vector<ExpertRating> out;
  bool header_seen = false;
  const auto rows = csv::lines(text);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string_view row = csv::trim(rows[i]);
    if (row.empty() || row.front() == '#') continue;
    const auto fields = csv::split(row);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 6 && fields[0] == "rater" && fields[1] == "class") continue;
      throw ParseError(fmt::format("{}:{}: expected header rater,class,p1,p2,p3,p4",
                                   source_name, i + 1));
    }
    if (fields.size() != 6) {
      throw ParseError(fmt::format("{}:{}: expected 6 fields, got {}", source_name,
                                   i + 1, fields.size()));
    }
    ExpertRating rating;
    rating.rater = std::string(fields[0]);
    rating.quality_class = std::string(fields[1]);
    for (std::size_t p = 0; p < 4; ++p) {
      const auto score = csv::parse_int(fields[2 + p]);
      if (!score || *score < 0 || *score > 3) {
        throw ParseError(fmt::format("{}:{}: score '{}' not in 0..3", source_name,
                                     i + 1, fields[2 + p]));
      }
      rating.scores[p] = static_cast<int>(*score);
    }
    out.push_back(std::move(rating));
  }
  return out;
}

std::vector<ExpertRating> load_expert_ratings(const std::filesystem::path& path) {
  return parse_expert_ratings(csv::read_file(path), path.string());
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mean_b = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - mean_a) * (rb[i] - mean_b);
    var_a += (ra[i] - mean_a) * (ra[i] - mean_a);
    var_b += (rb[i] - mean_b) * (rb[i] - mean_b);
  }
  if (var_a == 0.0 || var_b == 0.0) return std::nullopt;
  return cov / std::sqrt(var_a * var_b);
}

std::vector<ClassAgreement> expert_agreement(
    const std::map<std::string, std::array<double, 4>>& class_importance,
    std::span<const ExpertRating> ratings, std::span<const std::string> classes) {
  std::vector<ClassAgreement> out;
  for (const std::string& cls : classes) {
    const auto it = class_importance.find(cls);
    if (it == class_importance.end()) {
      throw InvalidArgument("expert_agreement: no importance summary for class " + cls);
    }
    ClassAgreement agreement;
    agreement.quality_class = cls;
    agreement.importance = it->second;
    const auto& imp = agreement.importance;
    const auto [lo, hi] = std::minmax_element(imp.begin(), imp.end());
    for (std::size_t p = 0; p < 4; ++p) {
      agreement.normalized[p] = *hi > *lo ? (imp[p] - *lo) / (*hi - *lo) : 0.5;
    }
    agreement.model_top_phase =
        static_cast<int>(std::max_element(imp.begin(), imp.end()) - imp.begin()) + 1;

    for (const ExpertRating& rating : ratings) {
      if (rating.quality_class != cls) continue;
      RaterAgreement rater;
      rater.rater = rating.rater;
      const int best = *std::max_element(rating.scores.begin(), rating.scores.end());
      std::array<double, 4> scores{};
      for (std::size_t p = 0; p < 4; ++p) {
        if (rating.scores[p] == best) rater.top_phases.push_back(static_cast<int>(p) + 1);
        scores[p] = rating.scores[p];
      }
      rater.top_phase_match =
          std::find(rater.top_phases.begin(), rater.top_phases.end(),
                    agreement.model_top_phase) != rater.top_phases.end();
      rater.rank_correlation = spearman(agreement.normalized, scores);
      agreement.raters.push_back(std::move(rater));
    }
    if (agreement.raters.empty()) {
      throw InvalidArgument("expert_agreement: no ratings for class " + cls);
    }
    out.push_back(std::move(agreement));
  }
  return out;
}

nlohmann::json to_json(const std::vector<ClassAgreement>& agreement) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& cls : agreement) {
    nlohmann::json raters = nlohmann::json::array();
    for (const auto& r : cls.raters) {
      raters.push_back({{"rater", r.rater},
                        {"top_phases", r.top_phases},
                        {"top_phase_match", r.top_phase_match},
                        {"rank_correlation", r.rank_correlation
                                                 ? nlohmann::json(*r.rank_correlation)
                                                 : nlohmann::json(nullptr)}});
    }
    out.push_back({{"class", cls.quality_class},
                   {"importance", cls.importance},
                   {"normalized", cls.normalized},
                   {"model_top_phase", cls.model_top_phase},
                   {"raters", raters}});
  }
  return out;
}

}  // namespace crimpxai
