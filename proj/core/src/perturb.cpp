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

#include "crimpxai/perturb.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "crimpxai/csv.hpp"
#include "crimpxai/error.hpp"
#include "crimpxai/metrics.hpp"
#include "crimpxai/parallel.hpp"
#include "crimpxai/random.hpp"

namespace crimpxai {

std::string_view to_string(ReplacementKind kind) {
  switch (kind) {
    case ReplacementKind::kZero:
      return "ZERO";
    case ReplacementKind::kRandom:
      return "RANDOM";
    case ReplacementKind::kRemove:
      return "REMOVE";
  }
  return "?";
}

std::optional<ReplacementKind> parse_replacement_kind(std::string_view text) {
  for (auto kind : {ReplacementKind::kZero, ReplacementKind::kRandom, ReplacementKind::kRemove}) {
    const std::string_view name = to_string(kind);
    if (std::ranges::equal(text, name, [](char a, char b) {
          return std::toupper(static_cast<unsigned char>(a)) == b;
        })) {
      return kind;
    }
  }
  return std::nullopt;
}

std::string PerturbationPlan::phase_label() const {
  std::string out = "(";
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(phases[i]);
  }
  return out + ")";
}

std::vector<std::vector<int>> enumerate_phase_subsets() {
  std::vector<std::vector<int>> out;
  for (int size = 1; size <= 3; ++size) {
    for (unsigned mask = 1; mask < 16; ++mask) {
      if (std::popcount(mask) != size) continue;
      std::vector<int> subset;
      for (int p = 0; p < 4; ++p) {
        if (mask & (1u << p)) subset.push_back(p + 1);
      }
      out.push_back(std::move(subset));
    }
    std::sort(out.end() - static_cast<std::ptrdiff_t>(
                              std::count_if(out.begin(), out.end(),
                                            [&](const auto& s) {
                                              return s.size() == static_cast<std::size_t>(size);
                                            })),
              out.end());
  }
  return out;
}

std::vector<PerturbationPlan> enumerate_plans(std::uint64_t random_seed) {
  std::vector<PerturbationPlan> plans;
  const auto subsets = enumerate_phase_subsets();
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    plans.push_back({subsets[s], ReplacementStrategy::zero()});
    plans.push_back({subsets[s], ReplacementStrategy::random(derive_seed(random_seed, s))});
    plans.push_back({subsets[s], ReplacementStrategy::remove()});
  }
  return plans;
}

namespace {

void validate_plan(const PerturbationPlan& plan) {
  if (plan.phases.empty() || plan.phases.size() > 3) {
    throw InvalidArgument("perturbation plan must cover 1 to 3 phases");
  }
  for (std::size_t i = 0; i < plan.phases.size(); ++i) {
    if (plan.phases[i] < 1 || plan.phases[i] > 4) {
      throw InvalidArgument(fmt::format("phase {} outside 1..4", plan.phases[i]));
    }
    if (i > 0 && plan.phases[i] <= plan.phases[i - 1]) {
      throw InvalidArgument("perturbation plan phases must be sorted and distinct");
    }
  }
}

}  // namespace

FeatureMatrix apply_replacement(const FeatureMatrix& x, const PerturbationPlan& plan,
                                const PhaseBoundaries& boundaries) {
  validate_plan(plan);
  const PhaseSlices slices = slice(x.cols(), boundaries);
  std::vector<bool> targeted(x.cols(), false);
  for (int p : plan.phases) {
    const IndexRange& r = slices.ranges[static_cast<std::size_t>(p - 1)];
    for (std::size_t i = r.begin; i < r.end; ++i) targeted[i] = true;
  }

  if (plan.strategy.kind == ReplacementKind::kRemove) {
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (!targeted[j]) kept.push_back(j);
    }
    FeatureMatrix out(x.rows(), kept.size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t k = 0; k < kept.size(); ++k) out(i, k) = x(i, kept[k]);
    }
    return out;
  }

  FeatureMatrix out = x;
  Rng rng(plan.strategy.seed);
  const bool random = plan.strategy.kind == ReplacementKind::kRandom;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (targeted[j]) out(i, j) = random ? rng.uniform() : 0.0;
    }
  }
  return out;
}

namespace {

double accuracy_of(const Forest& forest, const FeatureMatrix& x, std::span<const int> y,
                   int jobs) {
  const auto predicted = predict(forest, x, jobs);
  return summarize(confusion(y, predicted, static_cast<std::size_t>(forest.n_classes)))
      .accuracy;
}

}  // namespace

SelectivityStudy run_selectivity(const FeatureMatrix& train, std::span<const int> y_train,
                                 const FeatureMatrix& test, std::span<const int> y_test,
                                 const std::vector<std::string>& class_names,
                                 const Hyperparams& hp, const PhaseBoundaries& boundaries,
                                 std::span<const PerturbationPlan> plans, std::uint64_t seed,
                                 int jobs) {
  if (train.cols() != test.cols()) {
    throw InvalidArgument("train and test feature dimensions differ");
  }
  if (test.rows() == 0) throw InvalidArgument("selectivity study needs test instances");
  boundaries.validate();

  SelectivityStudy study;
  const Forest base = fit_forest(train, y_train, class_names, hp, seed, jobs);
  study.base_accuracy = accuracy_of(base, test, y_test, jobs);

  FeatureMatrix stacked(train.rows() + test.rows(), train.cols());
  for (std::size_t i = 0; i < train.rows(); ++i) {
    std::copy(train.row(i).begin(), train.row(i).end(), stacked.row(i).begin());
  }
  for (std::size_t i = 0; i < test.rows(); ++i) {
    std::copy(test.row(i).begin(), test.row(i).end(), stacked.row(train.rows() + i).begin());
  }
  std::vector<std::size_t> train_rows(train.rows());
  std::vector<std::size_t> test_rows(test.rows());
  for (std::size_t i = 0; i < train_rows.size(); ++i) train_rows[i] = i;
  for (std::size_t i = 0; i < test_rows.size(); ++i) test_rows[i] = train.rows() + i;

  study.results.resize(plans.size());
  // Plans run in parallel; each retraining is single-threaded.
  parallel_for(plans.size(), jobs, [&](std::size_t k) {
    SelectivityResult& result = study.results[k];
    result.plan = plans[k];
    try {
      const FeatureMatrix perturbed = apply_replacement(stacked, plans[k], boundaries);
      result.feature_dim = perturbed.cols();
      const Forest model = fit_forest(perturbed.select_rows(train_rows), y_train,
                                      class_names, hp, seed, 1);
      result.test_accuracy = accuracy_of(model, perturbed.select_rows(test_rows), y_test, 1);
      result.delta_vs_base = result.test_accuracy - study.base_accuracy;
    } catch (const std::exception& e) {
      result.error = e.what();
    }
  });
  return study;
}

SelectivityReport selectivity_report(const SelectivityStudy& study,
                                     const PhaseBoundaries& boundaries,
                                     std::optional<std::array<double, 4>> importance) {
  SelectivityReport report;
  report.base_accuracy = study.base_accuracy;
  const PhaseSlices slices = slice(boundaries.ends[3], boundaries);

  for (auto kind : {ReplacementKind::kZero, ReplacementKind::kRandom, ReplacementKind::kRemove}) {
    for (std::size_t size = 1; size <= 3; ++size) {
      SelectivityRow row;
      row.strategy = kind;
      row.subset_size = size;
      for (const auto& result : study.results) {
        if (result.error || result.plan.strategy.kind != kind ||
            result.plan.phases.size() != size) {
          continue;
        }
        SelectivityCell cell;
        cell.phases = result.plan.phase_label();
        cell.accuracy = result.test_accuracy;
        cell.delta = result.delta_vs_base;
        for (int p : result.plan.phases) {
          cell.perturbed_points += slices.ranges[static_cast<std::size_t>(p - 1)].size();
        }
        row.cells.push_back(std::move(cell));
      }
      if (row.cells.empty()) continue;
      const auto [lo, hi] = std::minmax_element(
          row.cells.begin(), row.cells.end(),
          [](const auto& a, const auto& b) { return a.accuracy < b.accuracy; });
      const double lo_acc = lo->accuracy;
      const double hi_acc = hi->accuracy;
      for (auto& cell : row.cells) {
        cell.is_min = cell.accuracy == lo_acc;
        cell.is_max = cell.accuracy == hi_acc;
      }
      report.rows.push_back(std::move(row));
    }
  }

  std::array<double, 4> drop_sum{};
  std::array<int, 4> drop_count{};
  bool any_change = false;
  for (const auto& result : study.results) {
    if (result.error) continue;
    if (result.delta_vs_base != 0.0) any_change = true;
    if (result.plan.phases.size() == 1) {
      const auto p = static_cast<std::size_t>(result.plan.phases[0] - 1);
      drop_sum[p] += -result.delta_vs_base;
      ++drop_count[p];
    }
  }
  std::vector<double> drops;
  std::vector<double> imps;
  for (std::size_t p = 0; p < 4; ++p) {
    if (drop_count[p] == 0) continue;
    report.single_phase_drop[p] = drop_sum[p] / drop_count[p];
    if (report.most_selective_phase == 0 ||
        *report.single_phase_drop[p] >
            *report.single_phase_drop[static_cast<std::size_t>(report.most_selective_phase - 1)]) {
      report.most_selective_phase = static_cast<int>(p) + 1;
    }
    if (importance) {
      drops.push_back(*report.single_phase_drop[p]);
      imps.push_back((*importance)[p]);
    }
  }

  if (!any_change) {
    report.verdict = "no selective phase";
    report.most_selective_phase = 0;
  } else if (report.most_selective_phase == 0) {
    report.verdict = "no single-phase results";
  } else if (importance) {
    const auto& imp = *importance;
    const int top = static_cast<int>(std::max_element(imp.begin(), imp.end()) - imp.begin()) + 1;
    report.rank_agreement = spearman(drops, imps);
    report.verdict = top == report.most_selective_phase ? "consistent" : "inconsistent";
  } else {
    report.verdict = fmt::format("most selective phase ({})", report.most_selective_phase);
  }
  return report;
}

void write_selectivity_csv(std::ostream& out, const SelectivityStudy& study) {
  out << "strategy,phases,accuracy,delta_vs_base,feature_dim\n";
  out << "BASE,," << csv::format_double(study.base_accuracy) << ",0,";
  out << '\n';
  for (const auto& r : study.results) {
    out << to_string(r.plan.strategy.kind) << ",\"" << r.plan.phase_label() << "\",";
    if (r.error) {
      out << "NA,NA," << r.feature_dim << '\n';
      continue;
    }
    out << csv::format_double(r.test_accuracy) << ',' << csv::format_double(r.delta_vs_base)
        << ',' << r.feature_dim << '\n';
  }
}

nlohmann::json to_json(const SelectivityStudy& study) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& r : study.results) {
    nlohmann::json entry = {{"strategy", to_string(r.plan.strategy.kind)},
                            {"phases", r.plan.phases},
                            {"feature_dim", r.feature_dim}};
    if (r.error) {
      entry["error"] = *r.error;
    } else {
      entry["accuracy"] = r.test_accuracy;
      entry["delta_vs_base"] = r.delta_vs_base;
    }
    results.push_back(std::move(entry));
  }
  return {{"base_accuracy", study.base_accuracy}, {"results", results}};
}

std::string render_selectivity_tables(const SelectivityReport& report) {
  std::string out = fmt::format("base accuracy {:.3f}\n", report.base_accuracy);
  for (std::size_t size = 1; size <= 3; ++size) {
    const SelectivityRow* header = nullptr;
    for (const auto& row : report.rows) {
      if (row.subset_size == size) {
        header = &row;
        break;
      }
    }
    if (!header) continue;
    out += fmt::format("\n{} phase(s) manipulated\n{:<8}", size, "alpha");
    for (const auto& cell : header->cells) {
      out += fmt::format(" {:>12}", fmt::format("{}[{}]", cell.phases, cell.perturbed_points));
    }
    out += '\n';
    for (const auto& row : report.rows) {
      if (row.subset_size != size) continue;
      out += fmt::format("{:<8}", to_string(row.strategy));
      for (const auto& cell : row.cells) {
        const char* mark = cell.is_min ? "v" : (cell.is_max ? "^" : " ");
        out += fmt::format(" {:>11.3f}{}", cell.accuracy, mark);
      }
      out += '\n';
    }
  }
  out += "\nv = lowest accuracy (highest impact), ^ = highest accuracy; [n] = perturbed points\n";
  out += "single-phase mean drop:";
  for (std::size_t p = 0; p < 4; ++p) {
    out += report.single_phase_drop[p] ? fmt::format(" ({}) {:+.3f}", p + 1,
                                                     *report.single_phase_drop[p])
                                       : fmt::format(" ({}) n/a", p + 1);
  }
  out += fmt::format("\nverdict: {}\n", report.verdict);
  if (report.rank_agreement) {
    out += fmt::format("rank agreement (drop vs importance): {:.3f}\n", *report.rank_agreement);
  }
  return out;
}

}  // namespace crimpxai
