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

#ifndef CRIMPXAI_FOREST_HPP_
#define CRIMPXAI_FOREST_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crimpxai/feature_matrix.hpp"

namespace crimpxai {

// Depth limit of a tree; "unlimited" is its own state, not a magic number.
class MaxDepth {
 public:
  static MaxDepth unlimited() { return MaxDepth(); }
  static MaxDepth of(int depth);

  bool is_unlimited() const { return !limit_; }
  // Only valid when !is_unlimited().
  int value() const { return *limit_; }
  bool allows(int depth) const { return !limit_ || depth < *limit_; }

  // "None" for unlimited, otherwise the decimal depth.
  std::string to_string() const;
  static MaxDepth parse(const nlohmann::json& json);
  nlohmann::json to_json() const;

  // Shallower limits order first; unlimited is the deepest.
  friend bool operator<(const MaxDepth& a, const MaxDepth& b);
  friend bool operator==(const MaxDepth&, const MaxDepth&) = default;

 private:
  MaxDepth() = default;
  explicit MaxDepth(int depth) : limit_(depth) {}
  std::optional<int> limit_;
};

struct Hyperparams {
  int n_estimators = 100;
  MaxDepth max_depth = MaxDepth::unlimited();
  // Candidate features per split; nullopt means ceil(sqrt(D)).
  std::optional<int> features_per_split;
  bool bootstrap = true;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

nlohmann::json to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& json);

// Internal nodes route x[feature] <= threshold to `left`. Leaves carry the
// per-class training counts; sample_count is kept on every node because the
// path-dependent Shapley recursion needs the training routing proportions.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::int64_t sample_count = 0;
  std::vector<std::int64_t> class_counts;  // leaves only

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  // False when loaded from a model file without node sample counts.
  bool has_sample_counts = true;

  std::size_t leaf_index(std::span<const double> x) const;
  // Class proportions of the leaf reached by x.
  std::vector<double> predict_proba(std::span<const double> x) const;
  int depth() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

struct Forest {
  std::vector<Tree> trees;
  int n_classes = 0;
  std::vector<std::string> class_names;
  std::size_t n_features = 0;
  Hyperparams hyperparams;
  std::uint64_t seed = 0;
  // Mean predicted probability per class over the training data.
  std::vector<double> base_rate;

  friend bool operator==(const Forest&, const Forest&) = default;
};

// Grows one CART tree with Gini impurity. `features_per_split` candidate
// features are drawn per node; if none of them admits a split, remaining
// features are tried in the drawn order. Splits stop at max_depth, pure nodes
// and nodes with fewer than 2 samples.
Tree fit_tree(const FeatureMatrix& x, std::span<const int> y, int n_classes,
              MaxDepth max_depth, int features_per_split, std::uint64_t seed);

// Same, on a multiset of row indices (used for bootstrap resamples).
Tree fit_tree_on(const FeatureMatrix& x, std::span<const int> y, int n_classes,
                 std::span<const std::size_t> rows, MaxDepth max_depth,
                 int features_per_split, std::uint64_t seed);

// Trees are seeded with derive_seed(seed, tree index), so the result does not
// depend on `jobs`.
Forest fit_forest(const FeatureMatrix& x, std::span<const int> y,
                  std::vector<std::string> class_names, const Hyperparams& hp,
                  std::uint64_t seed, int jobs = 1);

std::vector<double> predict_proba(const Forest& forest, std::span<const double> x);
// Argmax of predict_proba; ties go to the lowest class index.
int predict(const Forest& forest, std::span<const double> x);
std::vector<int> predict(const Forest& forest, const FeatureMatrix& x, int jobs = 1);

inline constexpr const char* kForestSchema = "crimpxai.forest/v1";

nlohmann::json to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& json);
void save_forest(const std::filesystem::path& path, const Forest& forest);
Forest load_forest(const std::filesystem::path& path);

struct FoldMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct CvReport {
  Hyperparams hyperparams;
  std::vector<FoldMetrics> folds;
  FoldMetrics mean;
  FoldMetrics stddev;  // population standard deviation over folds
};

nlohmann::json to_json(const CvReport& report);

// Shuffles row indices with the seed, cuts them into `folds` contiguous
// chunks (the first n % folds chunks one larger) and validates on each chunk
// after training on the rest.
CvReport kfold_cv(const FeatureMatrix& x, std::span<const int> y,
                  const std::vector<std::string>& class_names, const Hyperparams& hp,
                  int folds, std::uint64_t seed, int jobs = 1);

struct HyperGrid {
  std::vector<int> n_estimators;
  std::vector<MaxDepth> max_depth;
  int cv_folds = 5;

  // n_estimators {50,100,200,300,400} x max_depth {None,5,10,20,30}, 5 folds.
  static HyperGrid standard();
};

nlohmann::json to_json(const HyperGrid& grid);
HyperGrid hyper_grid_from_json(const nlohmann::json& json);

struct GridSearchResult {
  Hyperparams best;
  std::size_t best_index = 0;
  std::vector<CvReport> cells;  // n_estimators-major order
};

// Evaluates every cell with kfold_cv and keeps the highest mean accuracy;
// ties prefer fewer trees, then a shallower depth limit. features_per_split
// and bootstrap are taken from `base`.
GridSearchResult grid_search(const FeatureMatrix& x, std::span<const int> y,
                             const std::vector<std::string>& class_names,
                             const HyperGrid& grid, const Hyperparams& base,
                             std::uint64_t seed, int jobs = 1);

}  // namespace crimpxai

#endif  // CRIMPXAI_FOREST_HPP_
