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

#ifndef CRIMPXAI_PHASES_HPP_
#define CRIMPXAI_PHASES_HPP_

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crimpxai/shapley.hpp"

namespace crimpxai {

inline constexpr std::array<std::string_view, 4> kPhaseNames{
    "Centring", "Rolling in", "Compression", "Springback"};

// Exclusive end index of each of the four crimp phases; ends[3] is the
// feature-vector length.
struct PhaseBoundaries {
  std::array<std::size_t, 4> ends{75, 150, 345, 500};

  // Throws InvalidArgument unless 0 < x1 < x2 < x3 < x4.
  void validate() const;
  friend bool operator==(const PhaseBoundaries&, const PhaseBoundaries&) = default;
};

nlohmann::json to_json(const PhaseBoundaries& boundaries);
PhaseBoundaries phase_boundaries_from_json(const nlohmann::json& json);

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

// Half-open ranges [0,x1), [x1,x2), [x2,x3), [x3,x4).
struct PhaseSlices {
  std::array<IndexRange, 4> ranges;
};

// Throws InvalidArgument when x4 differs from `length`.
PhaseSlices slice(std::size_t length, const PhaseBoundaries& boundaries);
PhaseSlices slice(const Attribution& attribution, const PhaseBoundaries& boundaries);

struct PhaseImportance {
  std::array<double, 4> importance{};  // signed mean attribution per phase
  std::array<double, 4> weights{};     // min-max normalized importance
  int top_phase = 1;                   // 1-based argmax, ties to the lowest

  friend bool operator==(const PhaseImportance&, const PhaseImportance&) = default;
};

// Min-max over the four values; all-equal input maps to 0.5 everywhere.
std::array<double, 4> normalize_weights(const std::array<double, 4>& importance);

PhaseImportance phase_importance(const PhaseSlices& slices, std::span<const double> values);
PhaseImportance phase_importance(const PhaseSlices& slices, const Attribution& attribution);

struct LabeledImportance {
  std::string label;
  PhaseImportance importance;
};

struct PhaseStat {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct ClassPhaseRow {
  std::string label;
  std::size_t count = 0;
  std::array<PhaseStat, 4> phases{};
  int highest_phase = 1;
  int lowest_phase = 1;
};

struct ClassPhaseSummary {
  std::vector<ClassPhaseRow> rows;  // in the order of `labels`
  std::vector<std::string> warnings;
};

// Mean and population standard deviation of I(i) per label. Labels in
// `labels` without instances are omitted and reported in `warnings`.
// Throws InvalidArgument on an empty batch.
ClassPhaseSummary class_phase_summary(std::span<const LabeledImportance> batch,
                                      std::span<const std::string> labels);

// Phase rows x class columns, "<label> mean" and "<label> std" per class.
void write_phase_summary_csv(std::ostream& out, const ClassPhaseSummary& summary);
nlohmann::json to_json(const ClassPhaseSummary& summary);

}  // namespace crimpxai

#endif  // CRIMPXAI_PHASES_HPP_
