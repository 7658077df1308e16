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

#include "crimpxai/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "crimpxai/csv.hpp"
#include "crimpxai/error.hpp"
#include "crimpxai/metrics.hpp"
#include "crimpxai/parallel.hpp"
#include "crimpxai/random.hpp"

namespace crimpxai {

MaxDepth MaxDepth::of(int depth) {
  if (depth < 1) throw InvalidArgument(fmt::format("max_depth must be >= 1, got {}", depth));
  return MaxDepth(depth);
}

std::string MaxDepth::to_string() const {
  return limit_ ? std::to_string(*limit_) : std::string("None");
}

MaxDepth MaxDepth::parse(const nlohmann::json& json) {
  if (json.is_null()) return unlimited();
  if (json.is_string()) {
    const auto text = json.get<std::string>();
    if (text == "None" || text == "none" || text == "unlimited") return unlimited();
    const auto value = csv::parse_int(text);
    if (!value) throw InvalidArgument("invalid max_depth '" + text + "'");
    return of(static_cast<int>(*value));
  }
  return of(json.get<int>());
}

nlohmann::json MaxDepth::to_json() const {
  return limit_ ? nlohmann::json(*limit_) : nlohmann::json(nullptr);
}

bool operator<(const MaxDepth& a, const MaxDepth& b) {
  if (a.is_unlimited()) return false;
  if (b.is_unlimited()) return true;
  return a.value() < b.value();
}

nlohmann::json to_json(const Hyperparams& hp) {
  return {{"n_estimators", hp.n_estimators},
          {"max_depth", hp.max_depth.to_json()},
          {"features_per_split", hp.features_per_split
                                     ? nlohmann::json(*hp.features_per_split)
                                     : nlohmann::json(nullptr)},
          {"bootstrap", hp.bootstrap}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& json) {
  Hyperparams hp;
  hp.n_estimators = json.value("n_estimators", hp.n_estimators);
  if (json.contains("max_depth")) hp.max_depth = MaxDepth::parse(json.at("max_depth"));
  if (json.contains("features_per_split") && !json.at("features_per_split").is_null()) {
    hp.features_per_split = json.at("features_per_split").get<int>();
  }
  hp.bootstrap = json.value("bootstrap", hp.bootstrap);
  if (hp.n_estimators < 1) throw InvalidArgument("n_estimators must be >= 1");
  if (hp.features_per_split && *hp.features_per_split < 1) {
    throw InvalidArgument("features_per_split must be >= 1");
  }
  return hp;
}

std::size_t Tree::leaf_index(std::span<const double> x) const {
  std::size_t node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold
                                        ? n.left
                                        : n.right);
  }
  return node;
}

std::vector<double> Tree::predict_proba(std::span<const double> x) const {
  const TreeNode& leaf = nodes[leaf_index(x)];
  std::vector<double> out(leaf.class_counts.size(), 0.0);
  const double total = static_cast<double>(leaf.sample_count);
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = static_cast<double>(leaf.class_counts[c]) / total;
  }
  return out;
}

int Tree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

namespace {

void check_training_input(const FeatureMatrix& x, std::span<const int> y, int n_classes) {
  if (x.rows() == 0) throw InvalidArgument("training set is empty");
  if (x.cols() == 0) throw InvalidArgument("training vectors have no features");
  if (x.rows() != y.size()) {
    throw InvalidArgument(
        fmt::format("{} feature rows but {} labels", x.rows(), y.size()));
  }
  if (n_classes < 1) throw InvalidArgument("n_classes must be >= 1");
  for (int label : y) {
    if (label < 0 || label >= n_classes) {
      throw InvalidArgument(
          fmt::format("label {} outside [0, {})", label, n_classes));
    }
  }
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int> y, int n_classes,
              MaxDepth max_depth, int features_per_split, std::uint64_t seed)
      : x_(x),
        y_(y),
        n_classes_(static_cast<std::size_t>(n_classes)),
        max_depth_(max_depth),
        features_per_split_(std::clamp<std::size_t>(
            static_cast<std::size_t>(std::max(features_per_split, 1)), 1, x.cols())),
        rng_(seed),
        features_(x.cols()) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  Tree build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    scratch_.reserve(rows_.size());
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = -1.0;
  };

  int grow(std::size_t begin, std::size_t end, int depth) {
    const std::size_t n = end - begin;
    std::vector<std::int64_t> counts(n_classes_, 0);
    for (std::size_t i = begin; i < end; ++i) ++counts[static_cast<std::size_t>(y_[rows_[i]])];

    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.back().sample_count = static_cast<std::int64_t>(n);

    const bool pure =
        std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    std::optional<Split> split;
    if (n >= 2 && !pure && max_depth_.allows(depth)) split = find_split(begin, end, counts);
    if (!split) {
      tree_.nodes[static_cast<std::size_t>(index)].class_counts = std::move(counts);
      return index;
    }

    const auto middle = std::stable_partition(
        rows_.begin() + static_cast<std::ptrdiff_t>(begin),
        rows_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t r) { return x_(r, split->feature) <= split->threshold; });
    const auto mid = static_cast<std::size_t>(middle - rows_.begin());

    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    return index;
  }

  // Maximizes sum_c L_c^2 / n_L + sum_c R_c^2 / n_R, which is equivalent to
  // maximizing the Gini impurity decrease.
  std::optional<Split> find_split(std::size_t begin, std::size_t end,
                                  const std::vector<std::int64_t>& counts) {
    const std::size_t d = features_.size();
    const std::size_t n = end - begin;
    std::optional<Split> best;
    std::vector<double> left(n_classes_);
    std::vector<double> right(n_classes_);
    for (std::size_t k = 0; k < d; ++k) {
      if (k >= features_per_split_ && best) break;
      std::swap(features_[k], features_[k + rng_.below(d - k)]);
      const std::size_t f = features_[k];

      scratch_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        scratch_.emplace_back(x_(rows_[i], f), y_[rows_[i]]);
      }
      std::sort(scratch_.begin(), scratch_.end());
      if (scratch_.front().first == scratch_.back().first) continue;

      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t c = 0; c < n_classes_; ++c) right[c] = static_cast<double>(counts[c]);
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (double r : right) right_sq += r * r;

      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = static_cast<std::size_t>(scratch_[i].second);
        left_sq += 2.0 * left[c] + 1.0;
        right_sq -= 2.0 * right[c] - 1.0;
        left[c] += 1.0;
        right[c] -= 1.0;
        const double lo = scratch_[i].first;
        const double hi = scratch_[i + 1].first;
        if (!(lo < hi)) continue;
        const double n_left = static_cast<double>(i + 1);
        const double n_right = static_cast<double>(n - i - 1);
        const double score = left_sq / n_left + right_sq / n_right;
        if (!best || score > best->score) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = Split{f, threshold, score};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  std::size_t n_classes_;
  MaxDepth max_depth_;
  std::size_t features_per_split_;
  Rng rng_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> rows_;
  std::vector<std::pair<double, int>> scratch_;
  Tree tree_;
};

int resolve_features_per_split(const Hyperparams& hp, std::size_t n_features) {
  if (hp.features_per_split) return *hp.features_per_split;
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
}

}  // namespace

Tree fit_tree_on(const FeatureMatrix& x, std::span<const int> y, int n_classes,
                 std::span<const std::size_t> rows, MaxDepth max_depth,
                 int features_per_split, std::uint64_t seed) {
  check_training_input(x, y, n_classes);
  if (rows.empty()) throw InvalidArgument("fit_tree: no rows selected");
  TreeBuilder builder(x, y, n_classes, max_depth, features_per_split, seed);
  return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

Tree fit_tree(const FeatureMatrix& x, std::span<const int> y, int n_classes,
              MaxDepth max_depth, int features_per_split, std::uint64_t seed) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_tree_on(x, y, n_classes, rows, max_depth, features_per_split, seed);
}

Forest fit_forest(const FeatureMatrix& x, std::span<const int> y,
                  std::vector<std::string> class_names, const Hyperparams& hp,
                  std::uint64_t seed, int jobs) {
  const int n_classes = static_cast<int>(class_names.size());
  check_training_input(x, y, n_classes);
  if (hp.n_estimators < 1) throw InvalidArgument("n_estimators must be >= 1");

  Forest forest;
  forest.n_classes = n_classes;
  forest.class_names = std::move(class_names);
  forest.n_features = x.cols();
  forest.hyperparams = hp;
  forest.seed = seed;
  forest.trees.resize(static_cast<std::size_t>(hp.n_estimators));

  const int mtry = resolve_features_per_split(hp, x.cols());
  const std::size_t n = x.rows();
  parallel_for(forest.trees.size(), jobs, [&](std::size_t t) {
    std::vector<std::size_t> rows(n);
    if (hp.bootstrap) {
      Rng sampler(derive_seed(seed, 2 * t));
      for (auto& r : rows) r = sampler.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    forest.trees[t] = fit_tree_on(x, y, n_classes, rows, hp.max_depth, mtry,
                                  derive_seed(seed, 2 * t + 1));
  });

  forest.base_rate.assign(static_cast<std::size_t>(n_classes), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = predict_proba(forest, x.row(i));
    for (std::size_t c = 0; c < p.size(); ++c) forest.base_rate[c] += p[c];
  }
  for (double& v : forest.base_rate) v /= static_cast<double>(n);
  return forest;
}

namespace {

void check_dimension(const Forest& forest, std::size_t size) {
  if (size != forest.n_features) {
    throw InvalidArgument(fmt::format("input has {} features, model expects {}",
                                      size, forest.n_features));
  }
}

// Adds tree `t`'s leaf proportions into `sum`.
void accumulate_tree(const Tree& tree, std::span<const double> x, std::vector<double>& sum) {
  const TreeNode& leaf = tree.nodes[tree.leaf_index(x)];
  const double total = static_cast<double>(leaf.sample_count);
  for (std::size_t c = 0; c < sum.size(); ++c) {
    sum[c] += static_cast<double>(leaf.class_counts[c]) / total;
  }
}

int argmax(std::span<const double> p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace

std::vector<double> predict_proba(const Forest& forest, std::span<const double> x) {
  check_dimension(forest, x.size());
  if (forest.trees.empty()) throw InvalidArgument("forest has no trees");
  std::vector<double> sum(static_cast<std::size_t>(forest.n_classes), 0.0);
  for (const Tree& tree : forest.trees) accumulate_tree(tree, x, sum);
  for (double& v : sum) v /= static_cast<double>(forest.trees.size());
  return sum;
}

int predict(const Forest& forest, std::span<const double> x) {
  return argmax(predict_proba(forest, x));
}

std::vector<int> predict(const Forest& forest, const FeatureMatrix& x, int jobs) {
  std::vector<int> out(x.rows());
  parallel_for(x.rows(), jobs, [&](std::size_t i) { out[i] = predict(forest, x.row(i)); });
  return out;
}

namespace {

nlohmann::json node_to_json(const Tree& tree, std::size_t index) {
  const TreeNode& node = tree.nodes[index];
  nlohmann::json out;
  if (tree.has_sample_counts || node.is_leaf()) out["node_sample_count"] = node.sample_count;
  if (node.is_leaf()) {
    out["class_distribution"] = node.class_counts;
    return out;
  }
  out["feature_index"] = node.feature;
  out["threshold"] = node.threshold;
  out["left"] = node_to_json(tree, static_cast<std::size_t>(node.left));
  out["right"] = node_to_json(tree, static_cast<std::size_t>(node.right));
  return out;
}

int node_from_json(const nlohmann::json& json, const Forest& forest, Tree& tree) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (json.contains("class_distribution")) {
    auto counts = json.at("class_distribution").get<std::vector<std::int64_t>>();
    if (counts.size() != static_cast<std::size_t>(forest.n_classes)) {
      throw ParseError("leaf class_distribution has wrong number of classes");
    }
    const std::int64_t total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    if (total <= 0) throw ParseError("leaf with empty class_distribution");
    if (json.contains("node_sample_count") &&
        json.at("node_sample_count").get<std::int64_t>() != total) {
      throw ParseError("leaf node_sample_count does not match class_distribution");
    }
    TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    node.sample_count = total;
    node.class_counts = std::move(counts);
    return index;
  }
  const int feature = json.at("feature_index").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= forest.n_features) {
    throw ParseError(fmt::format("feature_index {} outside [0, {})", feature,
                                 forest.n_features));
  }
  const double threshold = json.at("threshold").get<double>();
  const int left = node_from_json(json.at("left"), forest, tree);
  const int right = node_from_json(json.at("right"), forest, tree);
  TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
  node.feature = feature;
  node.threshold = threshold;
  node.left = left;
  node.right = right;
  if (json.contains("node_sample_count")) {
    node.sample_count = json.at("node_sample_count").get<std::int64_t>();
    const auto& l = tree.nodes[static_cast<std::size_t>(left)];
    const auto& r = tree.nodes[static_cast<std::size_t>(right)];
    if (tree.has_sample_counts && node.sample_count != l.sample_count + r.sample_count) {
      throw ParseError("node_sample_count differs from the sum of its children");
    }
  } else {
    tree.has_sample_counts = false;
  }
  return index;
}

}  // namespace

nlohmann::json to_json(const Forest& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& tree : forest.trees) trees.push_back(node_to_json(tree, 0));
  return {{"schema", kForestSchema},
          {"n_classes", forest.n_classes},
          {"class_names", forest.class_names},
          {"n_features", forest.n_features},
          {"hyperparams", to_json(forest.hyperparams)},
          {"seed", forest.seed},
          {"base_rate", forest.base_rate},
          {"trees", trees}};
}

Forest forest_from_json(const nlohmann::json& json) {
  try {
    if (json.value("schema", std::string()) != kForestSchema) {
      throw ParseError(fmt::format("unsupported forest schema '{}'",
                                   json.value("schema", std::string())));
    }
    Forest forest;
    forest.n_classes = json.at("n_classes").get<int>();
    forest.class_names = json.at("class_names").get<std::vector<std::string>>();
    forest.n_features = json.at("n_features").get<std::size_t>();
    forest.hyperparams = hyperparams_from_json(json.at("hyperparams"));
    forest.seed = json.at("seed").get<std::uint64_t>();
    forest.base_rate = json.value("base_rate", std::vector<double>{});
    if (forest.class_names.size() != static_cast<std::size_t>(forest.n_classes)) {
      throw ParseError("class_names length differs from n_classes");
    }
    for (const auto& root : json.at("trees")) {
      Tree tree;
      node_from_json(root, forest, tree);
      forest.trees.push_back(std::move(tree));
    }
    if (forest.trees.empty()) throw ParseError("forest has no trees");
    return forest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("forest: ") + e.what());
  }
}

void save_forest(const std::filesystem::path& path, const Forest& forest) {
  csv::write_file(path, to_json(forest).dump() + "\n");
}

Forest load_forest(const std::filesystem::path& path) {
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(csv::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return forest_from_json(json);
}

namespace {

nlohmann::json to_json(const FoldMetrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision},
          {"recall", m.recall}, {"f1", m.f1}};
}

FoldMetrics fold_metrics(std::span<const int> truth, std::span<const int> predicted,
                         std::size_t n_classes) {
  const MetricsSummary s = summarize(confusion(truth, predicted, n_classes));
  return {s.accuracy, s.macro_precision, s.macro_recall, s.macro_f1};
}

void finalize(CvReport& report) {
  const double k = static_cast<double>(report.folds.size());
  auto stat = [&](auto member) {
    double mean = 0.0;
    for (const auto& f : report.folds) mean += f.*member;
    mean /= k;
    double var = 0.0;
    for (const auto& f : report.folds) var += (f.*member - mean) * (f.*member - mean);
    report.mean.*member = mean;
    report.stddev.*member = std::sqrt(var / k);
  };
  stat(&FoldMetrics::accuracy);
  stat(&FoldMetrics::precision);
  stat(&FoldMetrics::recall);
  stat(&FoldMetrics::f1);
}

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validate;
};

std::vector<FoldSplit> make_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument(fmt::format("cv folds must be >= 2, got {}", folds));
  if (n < static_cast<std::size_t>(folds)) {
    throw InvalidArgument(fmt::format("{} samples are too few for {} folds", n, folds));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  const auto k = static_cast<std::size_t>(folds);
  std::vector<std::size_t> fold_of(n);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold_of[order[pos++]] = f;
  }
  std::vector<FoldSplit> out(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold_of[i] == f ? out[f].validate : out[f].train).push_back(i);
    }
  }
  return out;
}

std::vector<int> select_labels(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[rows[i]];
  return out;
}

}  // namespace

nlohmann::json to_json(const CvReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) folds.push_back(to_json(f));
  return {{"hyperparams", to_json(report.hyperparams)},
          {"folds", folds},
          {"mean", to_json(report.mean)},
          {"stddev", to_json(report.stddev)}};
}

CvReport kfold_cv(const FeatureMatrix& x, std::span<const int> y,
                  const std::vector<std::string>& class_names, const Hyperparams& hp,
                  int folds, std::uint64_t seed, int jobs) {
  check_training_input(x, y, static_cast<int>(class_names.size()));
  CvReport report;
  report.hyperparams = hp;
  for (const FoldSplit& fold : make_folds(x.rows(), folds, seed)) {
    const FeatureMatrix train = x.select_rows(fold.train);
    const FeatureMatrix validate = x.select_rows(fold.validate);
    const auto y_train = select_labels(y, fold.train);
    const auto y_validate = select_labels(y, fold.validate);
    const Forest forest = fit_forest(train, y_train, class_names, hp, seed, jobs);
    report.folds.push_back(
        fold_metrics(y_validate, predict(forest, validate, jobs), class_names.size()));
  }
  finalize(report);
  return report;
}

HyperGrid HyperGrid::standard() {
  return {{50, 100, 200, 300, 400},
          {MaxDepth::unlimited(), MaxDepth::of(5), MaxDepth::of(10), MaxDepth::of(20),
           MaxDepth::of(30)},
          5};
}

nlohmann::json to_json(const HyperGrid& grid) {
  nlohmann::json depths = nlohmann::json::array();
  for (const auto& d : grid.max_depth) depths.push_back(d.to_json());
  return {{"n_estimators", grid.n_estimators}, {"max_depth", depths},
          {"cv", grid.cv_folds}};
}

HyperGrid hyper_grid_from_json(const nlohmann::json& json) {
  HyperGrid grid;
  grid.n_estimators = json.at("n_estimators").get<std::vector<int>>();
  for (const auto& d : json.at("max_depth")) grid.max_depth.push_back(MaxDepth::parse(d));
  grid.cv_folds = json.value("cv", 5);
  if (grid.n_estimators.empty() || grid.max_depth.empty()) {
    throw InvalidArgument("hyperparameter grid lists must be non-empty");
  }
  if (grid.cv_folds < 2) throw InvalidArgument("grid cv must be >= 2");
  for (int n : grid.n_estimators) {
    if (n < 1) throw InvalidArgument("grid n_estimators entries must be >= 1");
  }
  return grid;
}

GridSearchResult grid_search(const FeatureMatrix& x, std::span<const int> y,
                             const std::vector<std::string>& class_names,
                             const HyperGrid& grid, const Hyperparams& base,
                             std::uint64_t seed, int jobs) {
  if (grid.n_estimators.empty() || grid.max_depth.empty()) {
    throw InvalidArgument("hyperparameter grid lists must be non-empty");
  }
  check_training_input(x, y, static_cast<int>(class_names.size()));
  const auto folds = make_folds(x.rows(), grid.cv_folds, seed);
  const int max_trees = *std::max_element(grid.n_estimators.begin(), grid.n_estimators.end());
  const std::size_t n_classes = class_names.size();

  // Tree t of a forest depends only on (seed, t), so every n_estimators value
  // is a prefix of the largest forest; one fit per (depth, fold) serves the
  // whole n_estimators axis.
  const std::size_t n_est = grid.n_estimators.size();
  const std::size_t n_depth = grid.max_depth.size();
  std::vector<CvReport> cells(n_est * n_depth);
  for (std::size_t e = 0; e < n_est; ++e) {
    for (std::size_t d = 0; d < n_depth; ++d) {
      CvReport& cell = cells[e * n_depth + d];
      cell.hyperparams = base;
      cell.hyperparams.n_estimators = grid.n_estimators[e];
      cell.hyperparams.max_depth = grid.max_depth[d];
    }
  }

  for (std::size_t d = 0; d < n_depth; ++d) {
    Hyperparams hp = base;
    hp.n_estimators = max_trees;
    hp.max_depth = grid.max_depth[d];
    for (const FoldSplit& fold : folds) {
      const FeatureMatrix train = x.select_rows(fold.train);
      const auto y_train = select_labels(y, fold.train);
      const auto y_validate = select_labels(y, fold.validate);
      const Forest forest = fit_forest(train, y_train, class_names, hp, seed, jobs);

      for (std::size_t e = 0; e < n_est; ++e) {
        const auto trees = static_cast<std::size_t>(grid.n_estimators[e]);
        std::vector<int> predicted(fold.validate.size());
        for (std::size_t i = 0; i < fold.validate.size(); ++i) {
          const auto row = x.row(fold.validate[i]);
          std::vector<double> sum(n_classes, 0.0);
          for (std::size_t t = 0; t < trees; ++t) accumulate_tree(forest.trees[t], row, sum);
          for (double& v : sum) v /= static_cast<double>(trees);
          predicted[i] = argmax(sum);
        }
        cells[e * n_depth + d].folds.push_back(
            fold_metrics(y_validate, predicted, n_classes));
      }
    }
  }

  GridSearchResult result;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    finalize(cells[i]);
    if (i == 0) continue;
    const CvReport& c = cells[i];
    const CvReport& b = cells[result.best_index];
    const bool better =
        c.mean.accuracy > b.mean.accuracy ||
        (c.mean.accuracy == b.mean.accuracy &&
         (c.hyperparams.n_estimators < b.hyperparams.n_estimators ||
          (c.hyperparams.n_estimators == b.hyperparams.n_estimators &&
           c.hyperparams.max_depth < b.hyperparams.max_depth)));
    if (better) result.best_index = i;
  }
  result.best = cells[result.best_index].hyperparams;
  result.cells = std::move(cells);
  return result;
}

}  // namespace crimpxai
