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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "crimpxai/dataset.hpp"
#include "crimpxai/error.hpp"
#include "crimpxai/forest.hpp"
#include "crimpxai/metrics.hpp"
#include "test_support.hpp"

namespace crimpxai {
namespace {

using testing::names;
using testing::random_problem;
using testing::TempDir;

void expect_consistent_counts(const Tree& tree, int n_classes) {
  for (const TreeNode& n : tree.nodes) {
    if (n.is_leaf()) {
      ASSERT_EQ(n.class_counts.size(), static_cast<std::size_t>(n_classes));
      EXPECT_EQ(std::accumulate(n.class_counts.begin(), n.class_counts.end(), std::int64_t{0}),
                n.sample_count);
    } else {
      EXPECT_EQ(tree.nodes[static_cast<std::size_t>(n.left)].sample_count +
                    tree.nodes[static_cast<std::size_t>(n.right)].sample_count,
                n.sample_count);
    }
  }
}

TEST(MaxDepth, ParseAndOrder) {
  EXPECT_TRUE(MaxDepth::parse(nullptr).is_unlimited());
  EXPECT_TRUE(MaxDepth::parse("None").is_unlimited());
  EXPECT_EQ(MaxDepth::parse(10).value(), 10);
  EXPECT_EQ(MaxDepth::unlimited().to_string(), "None");
  EXPECT_LT(MaxDepth::of(5), MaxDepth::of(10));
  EXPECT_LT(MaxDepth::of(30), MaxDepth::unlimited());
  EXPECT_THROW(MaxDepth::of(0), InvalidArgument);
}

TEST(FitTree, SingleSampleIsOneLeaf) {
  const FeatureMatrix x = FeatureMatrix::from_rows({{0.3, 0.7}});
  const std::vector<int> y{1};
  const Tree t = fit_tree(x, y, 2, MaxDepth::unlimited(), 2, 1);
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.predict_proba(x.row(0)), (std::vector<double>{0.0, 1.0}));
}

TEST(FitTree, SeparablePairSplitsBetween) {
  const FeatureMatrix x = FeatureMatrix::from_rows({{0.0}, {1.0}});
  const std::vector<int> y{0, 1};
  const Tree t = fit_tree(x, y, 2, MaxDepth::of(1), 1, 1);
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_GT(t.nodes[0].threshold, 0.0);
  EXPECT_LT(t.nodes[0].threshold, 1.0);
  EXPECT_EQ(t.predict_proba(x.row(0)), (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(t.predict_proba(x.row(1)), (std::vector<double>{0.0, 1.0}));
}

TEST(FitTree, XorDepthTwoFitsAllPoints) {
  const FeatureMatrix x = FeatureMatrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const std::vector<int> y{0, 1, 1, 0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tree t = fit_tree(x, y, 2, MaxDepth::of(2), 2, seed);
    EXPECT_LE(t.depth(), 2);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(t.predict_proba(x.row(i))[static_cast<std::size_t>(y[i])], 1.0) << seed;
    }
  }
}

TEST(FitTree, RejectsBadInput) {
  const FeatureMatrix empty(0, 3);
  EXPECT_THROW(fit_tree(empty, {}, 2, MaxDepth::unlimited(), 1, 0), InvalidArgument);
  const FeatureMatrix x = FeatureMatrix::from_rows({{0.0}, {1.0}});
  const std::vector<int> short_y{0};
  EXPECT_THROW(fit_tree(x, short_y, 2, MaxDepth::unlimited(), 1, 0), InvalidArgument);
  EXPECT_THROW(FeatureMatrix::from_rows({{0.0}, {1.0, 2.0}}), InvalidArgument);
}

TEST(FitTree, StructuralCountsConsistent) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_problem(rng, 60, 6, 3);
    const Tree t = fit_tree(p.x, p.y, 3, MaxDepth::unlimited(), 2, static_cast<std::uint64_t>(trial));
    expect_consistent_counts(t, 3);
    EXPECT_EQ(t.nodes[0].sample_count, 60);
  }
}

TEST(FitForest, EnsembleOfOneMatchesTree) {
  Rng rng(4);
  const auto p = random_problem(rng, 80, 5, 3);
  Hyperparams hp;
  hp.n_estimators = 1;
  hp.bootstrap = false;
  hp.features_per_split = 3;
  const Forest f = fit_forest(p.x, p.y, names(3), hp, 77);
  ASSERT_EQ(f.trees.size(), 1u);
  const Tree lone = fit_tree(p.x, p.y, 3, hp.max_depth, 3, derive_seed(77, 1));
  EXPECT_EQ(f.trees[0], lone);
  const auto q = random_problem(rng, 50, 5, 3);
  for (std::size_t i = 0; i < q.x.rows(); ++i) {
    EXPECT_EQ(predict_proba(f, q.x.row(i)), lone.predict_proba(q.x.row(i)));
  }
}

TEST(FitForest, DeterministicRegardlessOfJobs) {
  Rng rng(9);
  const auto p = random_problem(rng, 120, 8, 3);
  Hyperparams hp;
  hp.n_estimators = 12;
  const Forest a = fit_forest(p.x, p.y, names(3), hp, 5, 1);
  const Forest b = fit_forest(p.x, p.y, names(3), hp, 5, 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(predict(a, p.x, 1), predict(b, p.x, 3));
}

TEST(FitForest, MemorizesDistinctTrainingSet) {
  Rng rng(12);
  auto p = random_problem(rng, 100, 6, 3, 50);
  Hyperparams hp;
  hp.n_estimators = 3;
  hp.bootstrap = false;
  hp.features_per_split = 6;
  const Forest f = fit_forest(p.x, p.y, names(3), hp, 1);
  EXPECT_EQ(predict(f, p.x), p.y);
}

TEST(FitForest, ProbabilitiesAreDistributions) {
  Rng rng(31);
  const auto p = random_problem(rng, 90, 6, 4);
  Hyperparams hp;
  hp.n_estimators = 15;
  hp.max_depth = MaxDepth::of(4);
  const Forest f = fit_forest(p.x, p.y, names(4), hp, 3);
  EXPECT_EQ(f.trees.size(), 15u);
  for (const Tree& t : f.trees) expect_consistent_counts(t, 4);
  const auto q = random_problem(rng, 200, 6, 4);
  for (std::size_t i = 0; i < q.x.rows(); ++i) {
    const auto proba = predict_proba(f, q.x.row(i));
    double sum = 0.0;
    for (double v : proba) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  double base_sum = 0.0;
  for (double v : f.base_rate) base_sum += v;
  EXPECT_NEAR(base_sum, 1.0, 1e-12);
}

Forest hand_forest(const std::vector<int>& leaf_classes) {
  Forest f;
  f.n_classes = 3;
  f.class_names = names(3);
  f.n_features = 1;
  for (int c : leaf_classes) {
    Tree t;
    TreeNode leaf;
    leaf.sample_count = 2;
    leaf.class_counts = {0, 0, 0};
    leaf.class_counts[static_cast<std::size_t>(c)] = 2;
    t.nodes.push_back(leaf);
    f.trees.push_back(t);
  }
  f.hyperparams.n_estimators = static_cast<int>(leaf_classes.size());
  return f;
}

TEST(Predict, AveragingAndTieRule) {
  const std::vector<double> x{0.5};
  EXPECT_EQ(predict_proba(hand_forest({1}), x), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(predict(hand_forest({1}), x), 1);
  const Forest two = hand_forest({1, 0});
  EXPECT_EQ(predict_proba(two, x), (std::vector<double>{0.5, 0.5, 0}));
  EXPECT_EQ(predict(two, x), 0);
  const std::vector<double> wrong{0.5, 0.5};
  EXPECT_THROW(predict_proba(two, wrong), InvalidArgument);
}

TEST(ForestJson, RoundTripAndValidation) {
  Rng rng(2);
  const auto p = random_problem(rng, 70, 4, 3);
  Hyperparams hp;
  hp.n_estimators = 4;
  hp.max_depth = MaxDepth::of(3);
  const Forest f = fit_forest(p.x, p.y, names(3), hp, 8);
  TempDir dir;
  save_forest(dir / "m.json", f);
  const Forest back = load_forest(dir / "m.json");
  EXPECT_EQ(back, f);

  auto j = to_json(f);
  j["schema"] = "other/v9";
  EXPECT_THROW(forest_from_json(j), ParseError);
}

TEST(ForestJson, MissingSampleCountsAreFlagged) {
  Rng rng(2);
  const auto p = random_problem(rng, 40, 3, 2);
  Hyperparams hp;
  hp.n_estimators = 1;
  const Forest f = fit_forest(p.x, p.y, names(2), hp, 8);
  ASSERT_GT(f.trees[0].nodes.size(), 1u);
  auto j = to_json(f);
  j["trees"][0].erase("node_sample_count");
  const Forest back = forest_from_json(j);
  EXPECT_FALSE(back.trees[0].has_sample_counts);
}

TEST(KfoldCv, MinimalFoldsAndConstantLabels) {
  const FeatureMatrix x = FeatureMatrix::from_rows({{0.0}, {1.0}});
  const std::vector<int> y{0, 0};
  Hyperparams hp;
  hp.n_estimators = 3;
  const CvReport r = kfold_cv(x, y, names(2), hp, 2, 1);
  ASSERT_EQ(r.folds.size(), 2u);
  for (const auto& f : r.folds) EXPECT_EQ(f.accuracy, 1.0);
  EXPECT_THROW(kfold_cv(x, y, names(2), hp, 3, 1), InvalidArgument);
  EXPECT_THROW(kfold_cv(x, y, names(2), hp, 1, 1), InvalidArgument);
}

TEST(KfoldCv, MeanAndStddevMatchFolds) {
  Rng rng(6);
  const auto p = random_problem(rng, 103, 5, 3);
  Hyperparams hp;
  hp.n_estimators = 5;
  const CvReport r = kfold_cv(p.x, p.y, names(3), hp, 5, 3, 2);
  ASSERT_EQ(r.folds.size(), 5u);
  double mean = 0.0;
  for (const auto& f : r.folds) mean += f.accuracy / 5.0;
  double var = 0.0;
  for (const auto& f : r.folds) var += (f.accuracy - mean) * (f.accuracy - mean) / 5.0;
  EXPECT_NEAR(r.mean.accuracy, mean, 1e-12);
  EXPECT_NEAR(r.stddev.accuracy, std::sqrt(var), 1e-12);
}

TEST(GridSearch, SingleCellIsReturned) {
  Rng rng(15);
  const auto p = random_problem(rng, 40, 4, 2);
  HyperGrid grid{{7}, {MaxDepth::of(2)}, 3};
  const auto r = grid_search(p.x, p.y, names(2), grid, Hyperparams{}, 1);
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.best.n_estimators, 7);
  EXPECT_EQ(r.best.max_depth, MaxDepth::of(2));
}

TEST(GridSearch, MatchesExhaustiveRecomputation) {
  Rng rng(19);
  const auto p = random_problem(rng, 90, 6, 3);
  HyperGrid grid{{3, 8}, {MaxDepth::of(2), MaxDepth::unlimited()}, 4};
  const auto r = grid_search(p.x, p.y, names(3), grid, Hyperparams{}, 10, 2);
  ASSERT_EQ(r.cells.size(), 4u);
  double best = -1.0;
  std::size_t index = 0;
  for (int n : grid.n_estimators) {
    for (const MaxDepth& depth : grid.max_depth) {
      Hyperparams hp;
      hp.n_estimators = n;
      hp.max_depth = depth;
      const CvReport independent = kfold_cv(p.x, p.y, names(3), hp, grid.cv_folds, 10);
      EXPECT_EQ(independent.mean.accuracy, r.cells[index].mean.accuracy)
          << n << " " << depth.to_string();
      best = std::max(best, independent.mean.accuracy);
      ++index;
    }
  }
  EXPECT_EQ(r.cells[r.best_index].mean.accuracy, best);
  EXPECT_EQ(r.cells[r.best_index].hyperparams, r.best);
}

TEST(GridSearch, TiesPreferSmallerModels) {
  // Constant labels make every cell score 1.0.
  Rng rng(1);
  auto p = random_problem(rng, 30, 3, 1);
  HyperGrid grid{{10, 5}, {MaxDepth::unlimited(), MaxDepth::of(3)}, 3};
  const auto r = grid_search(p.x, p.y, names(1), grid, Hyperparams{}, 2);
  EXPECT_EQ(r.best.n_estimators, 5);
  EXPECT_EQ(r.best.max_depth, MaxDepth::of(3));
}

TEST(HyperGrid, StandardGridShape) {
  const HyperGrid g = HyperGrid::standard();
  EXPECT_EQ(g.n_estimators, (std::vector<int>{50, 100, 200, 300, 400}));
  ASSERT_EQ(g.max_depth.size(), 5u);
  EXPECT_TRUE(g.max_depth[0].is_unlimited());
  EXPECT_EQ(g.cv_folds, 5);
  const HyperGrid back = hyper_grid_from_json(to_json(g));
  EXPECT_EQ(back.n_estimators, g.n_estimators);
  EXPECT_EQ(back.max_depth, g.max_depth);
}

TEST(Forest, SynthThreeClassAccuracy) {
  const SynthDataset ds = synth_generate(SynthSpec::three_class(2, 0.01), 200, 3);
  const SplitManifest m = split(ds.data, 0.8, 3);
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> test;
  std::vector<int> y_train;
  std::vector<int> y_test;
  for (const auto& rec : ds.data.records()) {
    FeatureVector fv{rec.curve.id, rec.curve.samples};
    const bool in_test = std::find(m.test_ids.begin(), m.test_ids.end(), rec.curve.id) !=
                         m.test_ids.end();
    (in_test ? test : train).push_back(fv);
    (in_test ? y_test : y_train).push_back(class_index(rec.label, LabelMode::kMajor));
  }
  Hyperparams hp;
  hp.n_estimators = 40;
  const Forest f =
      fit_forest(FeatureMatrix::from_vectors(train), y_train, names(3), hp, 4, 2);
  const auto predicted = predict(f, FeatureMatrix::from_vectors(test));
  const auto summary = summarize(confusion(y_test, predicted, 3));
  EXPECT_GE(summary.accuracy, 0.95);
}

}  // namespace
}  // namespace crimpxai
