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

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "crimpxai/error.hpp"
#include "crimpxai/perturb.hpp"
#include "test_support.hpp"

namespace crimpxai {
namespace {

using testing::names;

FeatureMatrix ramp(std::size_t rows, std::size_t cols) {
  FeatureMatrix x(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) x(i, j) = 0.001 * static_cast<double>(i + j) + 0.5;
  }
  return x;
}

TEST(EnumeratePlans, CountsAndOrder) {
  const auto subsets = enumerate_phase_subsets();
  ASSERT_EQ(subsets.size(), 14u);
  std::set<std::vector<int>> unique(subsets.begin(), subsets.end());
  EXPECT_EQ(unique.size(), 14u);
  for (const auto& s : subsets) {
    EXPECT_GE(s.size(), 1u);
    EXPECT_LE(s.size(), 3u);
  }
  EXPECT_EQ(subsets[4], (std::vector<int>{1, 2}));
  EXPECT_EQ(subsets[13], (std::vector<int>{2, 3, 4}));

  const auto plans = enumerate_plans(9);
  ASSERT_EQ(plans.size(), 42u);
  EXPECT_EQ(plans[0].phases, (std::vector<int>{1}));
  EXPECT_EQ(plans[0].strategy, ReplacementStrategy::zero());
  EXPECT_EQ(plans[1].strategy.kind, ReplacementKind::kRandom);
  EXPECT_EQ(plans[2].strategy, ReplacementStrategy::remove());
  EXPECT_EQ(plans[3 * 5].phase_label(), "(1,3)");
  EXPECT_EQ(enumerate_plans(9), plans);
}

TEST(ApplyReplacement, ZeroTouchesOnlyPlanIndices) {
  const FeatureMatrix x = ramp(3, 500);
  const FeatureMatrix z = apply_replacement(x, {{4}, ReplacementStrategy::zero()}, {});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 500; ++j) {
      if (j >= 345) {
        EXPECT_EQ(z(i, j), 0.0);
      } else {
        EXPECT_EQ(z(i, j), x(i, j));
      }
    }
  }
}

TEST(ApplyReplacement, RemoveShortensUniformly) {
  const FeatureMatrix x = ramp(4, 500);
  const FeatureMatrix r = apply_replacement(x, {{4}, ReplacementStrategy::remove()}, {});
  EXPECT_EQ(r.cols(), 345u);
  const FeatureMatrix r13 = apply_replacement(x, {{1, 3}, ReplacementStrategy::remove()}, {});
  EXPECT_EQ(r13.cols(), 500u - 75u - 195u);
  EXPECT_EQ(r13(2, 0), x(2, 75));
  EXPECT_EQ(r13(2, 75), x(2, 345));
}

TEST(ApplyReplacement, RandomIsSeededUniformAndLocal) {
  const FeatureMatrix x = ramp(5, 500);
  const PerturbationPlan plan{{2, 3}, ReplacementStrategy::random(17)};
  const FeatureMatrix a = apply_replacement(x, plan, {});
  const FeatureMatrix b = apply_replacement(x, plan, {});
  EXPECT_EQ(a, b);
  const FeatureMatrix c = apply_replacement(x, {{2, 3}, ReplacementStrategy::random(18)}, {});
  EXPECT_NE(a, c);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 500; ++j) {
      if (j >= 75 && j < 345) {
        EXPECT_GE(a(i, j), 0.0);
        EXPECT_LT(a(i, j), 1.0);
      } else {
        EXPECT_EQ(a(i, j), x(i, j));
      }
    }
  }
}

TEST(ApplyReplacement, BoundaryMismatch) {
  const FeatureMatrix x = ramp(2, 400);
  EXPECT_THROW(apply_replacement(x, {{1}, ReplacementStrategy::zero()}, {}), InvalidArgument);
}

TEST(ReplacementKind, ParseAndPrint) {
  EXPECT_EQ(parse_replacement_kind("zero"), ReplacementKind::kZero);
  EXPECT_EQ(parse_replacement_kind("RANDOM"), ReplacementKind::kRandom);
  EXPECT_EQ(to_string(ReplacementKind::kRemove), "REMOVE");
  EXPECT_FALSE(parse_replacement_kind("mean").has_value());
}

struct Study {
  FeatureMatrix train;
  std::vector<int> y_train;
  FeatureMatrix test;
  std::vector<int> y_test;
};

// Class is encoded in phase 3 only; every other index is noise.
Study phase_three_problem() {
  Rng rng(4);
  auto make = [&](std::size_t n, FeatureMatrix& x, std::vector<int>& y) {
    x = FeatureMatrix(n, 500);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(i % 2);
      for (std::size_t j = 0; j < 500; ++j) x(i, j) = rng.uniform();
      for (std::size_t j = 200; j < 260; ++j) x(i, j) = 0.4 * y[i] + 0.3 * rng.uniform();
    }
  };
  Study s;
  make(80, s.train, s.y_train);
  make(40, s.test, s.y_test);
  return s;
}

TEST(RunSelectivity, NoPlansGivesBaseOnly) {
  const Study s = phase_three_problem();
  Hyperparams hp;
  hp.n_estimators = 10;
  const auto study = run_selectivity(s.train, s.y_train, s.test, s.y_test, names(2), hp, {},
                                     std::span<const PerturbationPlan>{}, 1);
  EXPECT_TRUE(study.results.empty());
  EXPECT_GE(study.base_accuracy, 0.9);
}

TEST(RunSelectivity, SignalPhaseIsSelectiveAndDeterministic) {
  const Study s = phase_three_problem();
  Hyperparams hp;
  hp.n_estimators = 15;
  const auto plans = enumerate_plans(3);
  const auto a = run_selectivity(s.train, s.y_train, s.test, s.y_test, names(2), hp, {}, plans,
                                 7, 1);
  const auto b = run_selectivity(s.train, s.y_train, s.test, s.y_test, names(2), hp, {}, plans,
                                 7, 4);
  ASSERT_EQ(a.results.size(), 42u);
  std::ostringstream ca;
  std::ostringstream cb;
  write_selectivity_csv(ca, a);
  write_selectivity_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
  for (const auto& r : a.results) {
    EXPECT_FALSE(r.error.has_value());
    EXPECT_GE(r.test_accuracy, 0.0);
    EXPECT_LE(r.test_accuracy, 1.0);
    EXPECT_NEAR(r.delta_vs_base, r.test_accuracy - a.base_accuracy, 1e-15);
    std::size_t removed = 0;
    const std::array<std::size_t, 4> sizes{75, 75, 195, 155};
    for (int p : r.plan.phases) removed += sizes[static_cast<std::size_t>(p - 1)];
    EXPECT_EQ(r.feature_dim,
              r.plan.strategy.kind == ReplacementKind::kRemove ? 500 - removed : 500u);
  }
  // Plans 6..8 perturb phase 3 alone.
  for (std::size_t k = 6; k < 9; ++k) EXPECT_LE(a.results[k].test_accuracy, 0.75);

  const auto report = selectivity_report(a, {}, std::array<double, 4>{0.0, 0.0, 0.01, 0.0});
  EXPECT_EQ(report.most_selective_phase, 3);
  EXPECT_EQ(report.rows.size(), 9u);
}

TEST(SelectivityReport, AllEqualIsNotSelective) {
  SelectivityStudy study;
  study.base_accuracy = 0.9;
  for (const auto& plan : enumerate_plans()) {
    study.results.push_back({plan, 0.9, 0.0, 500, {}});
  }
  const auto report = selectivity_report(study, {});
  EXPECT_EQ(report.verdict, "no selective phase");
  for (const auto& row : report.rows) {
    for (const auto& cell : row.cells) EXPECT_EQ(cell.delta, 0.0);
  }
}

TEST(SelectivityReport, PublishedSinglePhaseRowMinimumAtThree) {
  // Single-phase accuracies of the zero-replacement row as published.
  SelectivityStudy study;
  study.base_accuracy = 0.959;
  const std::array<double, 4> zero_row{0.951, 0.954, 0.861, 0.954};
  for (const auto& plan : enumerate_plans()) {
    double acc = 0.95;
    if (plan.phases.size() == 1) acc = zero_row[static_cast<std::size_t>(plan.phases[0] - 1)];
    study.results.push_back({plan, acc, acc - study.base_accuracy, 500, {}});
  }
  const auto report = selectivity_report(study, {});
  const auto& row = report.rows[0];
  ASSERT_EQ(row.cells.size(), 4u);
  EXPECT_TRUE(row.cells[2].is_min);
  EXPECT_TRUE(row.cells[1].is_max);
  EXPECT_TRUE(row.cells[3].is_max);
  EXPECT_EQ(report.most_selective_phase, 3);
  const std::string text = render_selectivity_tables(report);
  EXPECT_NE(text.find("0.861"), std::string::npos);
}

}  // namespace
}  // namespace crimpxai
