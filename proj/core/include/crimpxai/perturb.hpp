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

#ifndef CRIMPXAI_PERTURB_HPP_
#define CRIMPXAI_PERTURB_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crimpxai/feature_matrix.hpp"
#include "crimpxai/forest.hpp"
#include "crimpxai/phases.hpp"

namespace crimpxai {

enum class ReplacementKind { kZero = 0, kRandom = 1, kRemove = 2 };

// How perturbed phase points are replaced: zero fill, uniform [0,1) noise from
// a seeded stream, or removal of the points.
struct ReplacementStrategy {
  ReplacementKind kind = ReplacementKind::kZero;
  std::uint64_t seed = 0;  // only used by kRandom

  static ReplacementStrategy zero() { return {ReplacementKind::kZero, 0}; }
  static ReplacementStrategy random(std::uint64_t seed) {
    return {ReplacementKind::kRandom, seed};
  }
  static ReplacementStrategy remove() { return {ReplacementKind::kRemove, 0}; }

  friend bool operator==(const ReplacementStrategy&, const ReplacementStrategy&) = default;
};

std::string_view to_string(ReplacementKind kind);
std::optional<ReplacementKind> parse_replacement_kind(std::string_view text);

struct PerturbationPlan {
  std::vector<int> phases;  // sorted, 1-based, 1 to 3 distinct phases
  ReplacementStrategy strategy;

  // "(1,3)"
  std::string phase_label() const;
  friend bool operator==(const PerturbationPlan&, const PerturbationPlan&) = default;
};

// The 14 non-empty proper subsets of {1,2,3,4}: by size, then lexicographic.
std::vector<std::vector<int>> enumerate_phase_subsets();

// 14 subsets x {ZERO, RANDOM, REMOVE} = 42 plans, subset-major. RANDOM plans
// get derive_seed(random_seed, subset index) as their stream seed.
std::vector<PerturbationPlan> enumerate_plans(std::uint64_t random_seed = 0);

// Replaces (ZERO, RANDOM) or deletes (REMOVE) the plan's phase columns in
// every row. Untouched columns are copied bit-exactly. RANDOM draws row-major
// from one stream seeded by the plan.
FeatureMatrix apply_replacement(const FeatureMatrix& x, const PerturbationPlan& plan,
                                const PhaseBoundaries& boundaries);

struct SelectivityResult {
  PerturbationPlan plan;
  double test_accuracy = 0.0;
  double delta_vs_base = 0.0;
  std::size_t feature_dim = 0;
  std::optional<std::string> error;  // set when the plan failed
};

struct SelectivityStudy {
  double base_accuracy = 0.0;
  std::vector<SelectivityResult> results;  // in plan order
};

// Trains the unperturbed base model and one model per plan, all with `hp` and
// `seed`; train and test rows are perturbed together so both partitions see
// the same manipulation. A failing plan is recorded and the study continues.
SelectivityStudy run_selectivity(const FeatureMatrix& train, std::span<const int> y_train,
                                 const FeatureMatrix& test, std::span<const int> y_test,
                                 const std::vector<std::string>& class_names,
                                 const Hyperparams& hp, const PhaseBoundaries& boundaries,
                                 std::span<const PerturbationPlan> plans, std::uint64_t seed,
                                 int jobs = 1);

struct SelectivityCell {
  std::string phases;
  double accuracy = 0.0;
  double delta = 0.0;
  std::size_t perturbed_points = 0;
  bool is_min = false;
  bool is_max = false;
};

// One row of a result table: one strategy, all subsets of one size.
struct SelectivityRow {
  ReplacementKind strategy = ReplacementKind::kZero;
  std::size_t subset_size = 1;
  std::vector<SelectivityCell> cells;
};

struct SelectivityReport {
  double base_accuracy = 0.0;
  std::vector<SelectivityRow> rows;
  // Mean accuracy drop per single perturbed phase over strategies; nullopt
  // for phases without a single-phase result.
  std::array<std::optional<double>, 4> single_phase_drop{};
  int most_selective_phase = 0;  // 0 when undetermined
  std::optional<double> rank_agreement;  // Spearman(drop, importance)
  std::string verdict;
};

// Verdicts: "no selective phase" when no plan changes accuracy; otherwise
// "consistent"/"inconsistent" depending on whether the phase with the largest
// single-phase drop is the top importance phase, or "most selective phase (p)"
// when no importance ranking is supplied.
SelectivityReport selectivity_report(const SelectivityStudy& study,
                                     const PhaseBoundaries& boundaries,
                                     std::optional<std::array<double, 4>> importance = {});

// Columns strategy,phases,accuracy,delta_vs_base,feature_dim; the first row is
// the base model (strategy BASE).
void write_selectivity_csv(std::ostream& out, const SelectivityStudy& study);
nlohmann::json to_json(const SelectivityStudy& study);
std::string render_selectivity_tables(const SelectivityReport& report);

}  // namespace crimpxai

#endif  // CRIMPXAI_PERTURB_HPP_
