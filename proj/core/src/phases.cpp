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

#include "crimpxai/phases.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "crimpxai/csv.hpp"
#include "crimpxai/error.hpp"

namespace crimpxai {

void PhaseBoundaries::validate() const {
  std::size_t previous = 0;
  for (std::size_t end : ends) {
    if (end <= previous) {
      throw InvalidArgument(fmt::format(
          "phase boundaries must satisfy 0 < x1 < x2 < x3 < x4, got {},{},{},{}",
          ends[0], ends[1], ends[2], ends[3]));
    }
    previous = end;
  }
}

nlohmann::json to_json(const PhaseBoundaries& boundaries) { return boundaries.ends; }

PhaseBoundaries phase_boundaries_from_json(const nlohmann::json& json) {
  PhaseBoundaries b;
  b.ends = json.get<std::array<std::size_t, 4>>();
  b.validate();
  return b;
}

PhaseSlices slice(std::size_t length, const PhaseBoundaries& boundaries) {
  boundaries.validate();
  if (boundaries.ends[3] != length) {
    throw InvalidArgument(fmt::format("last phase boundary {} differs from length {}",
                                      boundaries.ends[3], length));
  }
  PhaseSlices slices;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < 4; ++p) {
    slices.ranges[p] = {begin, boundaries.ends[p]};
    begin = boundaries.ends[p];
  }
  return slices;
}

PhaseSlices slice(const Attribution& attribution, const PhaseBoundaries& boundaries) {
  return slice(attribution.values.size(), boundaries);
}

std::array<double, 4> normalize_weights(const std::array<double, 4>& importance) {
  const auto [lo, hi] = std::minmax_element(importance.begin(), importance.end());
  std::array<double, 4> weights{};
  for (std::size_t p = 0; p < 4; ++p) {
    weights[p] = *hi > *lo ? (importance[p] - *lo) / (*hi - *lo) : 0.5;
  }
  return weights;
}

PhaseImportance phase_importance(const PhaseSlices& slices, std::span<const double> values) {
  if (slices.ranges[3].end != values.size()) {
    throw InvalidArgument(fmt::format("phase slices cover {} points, attribution has {}",
                                      slices.ranges[3].end, values.size()));
  }
  PhaseImportance out;
  for (std::size_t p = 0; p < 4; ++p) {
    const IndexRange& r = slices.ranges[p];
    // Offsetting by the first entry keeps the mean of a constant slice exact.
    const double anchor = values[r.begin];
    double sum = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) sum += values[i] - anchor;
    out.importance[p] = anchor + sum / static_cast<double>(r.size());
  }
  out.weights = normalize_weights(out.importance);
  out.top_phase = static_cast<int>(std::max_element(out.importance.begin(),
                                                    out.importance.end()) -
                                   out.importance.begin()) +
                  1;
  return out;
}

PhaseImportance phase_importance(const PhaseSlices& slices, const Attribution& attribution) {
  return phase_importance(slices, attribution.values);
}

ClassPhaseSummary class_phase_summary(std::span<const LabeledImportance> batch,
                                      std::span<const std::string> labels) {
  if (batch.empty()) throw InvalidArgument("class_phase_summary: empty batch");
  std::map<std::string, std::vector<const PhaseImportance*>> buckets;
  for (const auto& item : batch) buckets[item.label].push_back(&item.importance);

  ClassPhaseSummary summary;
  for (const std::string& label : labels) {
    const auto it = buckets.find(label);
    if (it == buckets.end()) {
      summary.warnings.push_back("no instances for class " + label + "; omitted");
      continue;
    }
    const auto& items = it->second;
    ClassPhaseRow row;
    row.label = label;
    row.count = items.size();
    const double n = static_cast<double>(items.size());
    for (std::size_t p = 0; p < 4; ++p) {
      double mean = 0.0;
      for (const auto* imp : items) mean += imp->importance[p];
      mean /= n;
      double var = 0.0;
      for (const auto* imp : items) {
        var += (imp->importance[p] - mean) * (imp->importance[p] - mean);
      }
      row.phases[p] = {mean, std::sqrt(var / n)};
    }
    std::size_t hi = 0, lo = 0;
    for (std::size_t p = 1; p < 4; ++p) {
      if (row.phases[p].mean > row.phases[hi].mean) hi = p;
      if (row.phases[p].mean < row.phases[lo].mean) lo = p;
    }
    row.highest_phase = static_cast<int>(hi) + 1;
    row.lowest_phase = static_cast<int>(lo) + 1;
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

void write_phase_summary_csv(std::ostream& out, const ClassPhaseSummary& summary) {
  out << "phase";
  for (const auto& row : summary.rows) out << ',' << row.label << " mean," << row.label << " std";
  out << '\n';
  for (std::size_t p = 0; p < 4; ++p) {
    out << kPhaseNames[p] << " (" << p + 1 << ')';
    for (const auto& row : summary.rows) {
      out << ',' << csv::format_double(row.phases[p].mean) << ','
          << csv::format_double(row.phases[p].stddev);
    }
    out << '\n';
  }
}

nlohmann::json to_json(const ClassPhaseSummary& summary) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : summary.rows) {
    nlohmann::json phases = nlohmann::json::array();
    for (const auto& stat : row.phases) {
      phases.push_back({{"mean", stat.mean}, {"std", stat.stddev}});
    }
    rows.push_back({{"class", row.label},
                    {"count", row.count},
                    {"phases", phases},
                    {"highest_phase", row.highest_phase},
                    {"lowest_phase", row.lowest_phase}});
  }
  return {{"classes", rows}, {"warnings", summary.warnings}};
}

}  // namespace crimpxai
