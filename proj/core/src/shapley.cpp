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

#include "crimpxai/shapley.hpp"

#include <algorithm>
#include <bit>

#include <fmt/format.h>

#include "crimpxai/csv.hpp"
#include "crimpxai/error.hpp"
#include "crimpxai/parallel.hpp"

namespace crimpxai {

namespace {

struct PathElement {
  int feature;
  double zero_fraction;
  double one_fraction;
  double weight;
};

using Path = std::vector<PathElement>;

void extend(Path& path, double zero_fraction, double one_fraction, int feature) {
  const std::size_t n = path.size();
  path.push_back({feature, zero_fraction, one_fraction, n == 0 ? 1.0 : 0.0});
  const double denom = static_cast<double>(n + 1);
  for (std::size_t i = n; i-- > 0;) {
    path[i + 1].weight += one_fraction * path[i].weight * static_cast<double>(i + 1) / denom;
    path[i].weight = zero_fraction * path[i].weight * static_cast<double>(n - i) / denom;
  }
}

// Undoes extend() for the element at `index`.
void unwind(Path& path, std::size_t index) {
  const std::size_t n = path.size() - 1;
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double denom = static_cast<double>(n + 1);
  double next = path[n].weight;
  for (std::size_t j = n; j-- > 0;) {
    if (one != 0.0) {
      const double tmp = path[j].weight;
      path[j].weight = next * denom / (static_cast<double>(j + 1) * one);
      next = tmp - path[j].weight * zero * static_cast<double>(n - j) / denom;
    } else {
      path[j].weight = path[j].weight * denom / (zero * static_cast<double>(n - j));
    }
  }
  for (std::size_t j = index; j < n; ++j) {
    path[j].feature = path[j + 1].feature;
    path[j].zero_fraction = path[j + 1].zero_fraction;
    path[j].one_fraction = path[j + 1].one_fraction;
  }
  path.pop_back();
}

// Total weight of the path with element `index` unwound, without modifying it.
double unwound_sum(const Path& path, std::size_t index) {
  const std::size_t n = path.size() - 1;
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double denom = static_cast<double>(n + 1);
  double total = 0.0;
  if (one != 0.0) {
    double next = path[n].weight;
    for (std::size_t j = n; j-- > 0;) {
      const double tmp = next / (static_cast<double>(j + 1) * one);
      total += tmp;
      next = path[j].weight - tmp * zero * static_cast<double>(n - j);
    }
  } else {
    for (std::size_t j = n; j-- > 0;) {
      total += path[j].weight / (zero * static_cast<double>(n - j));
    }
  }
  return total * denom;
}

double leaf_value(const TreeNode& leaf, int class_index) {
  return static_cast<double>(leaf.class_counts[static_cast<std::size_t>(class_index)]) /
         static_cast<double>(leaf.sample_count);
}

class TreeShap {
 public:
  TreeShap(const Tree& tree, std::span<const double> x, int class_index,
           std::span<double> phi)
      : tree_(tree), x_(x), class_index_(class_index), phi_(phi) {}

  void run() { recurse(0, Path{}, 1.0, 1.0, -1); }

 private:
  void recurse(std::size_t node_index, Path path, double zero_fraction,
               double one_fraction, int feature) {
    extend(path, zero_fraction, one_fraction, feature);
    const TreeNode& node = tree_.nodes[node_index];
    if (node.is_leaf()) {
      const double value = leaf_value(node, class_index_);
      for (std::size_t i = 1; i < path.size(); ++i) {
        const double w = unwound_sum(path, i);
        phi_[static_cast<std::size_t>(path[i].feature)] +=
            w * (path[i].one_fraction - path[i].zero_fraction) * value;
      }
      return;
    }

    const auto split = static_cast<std::size_t>(node.feature);
    const bool goes_left = x_[split] <= node.threshold;
    const auto hot = static_cast<std::size_t>(goes_left ? node.left : node.right);
    const auto cold = static_cast<std::size_t>(goes_left ? node.right : node.left);

    double incoming_zero = 1.0;
    double incoming_one = 1.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
      if (path[i].feature == node.feature) {
        incoming_zero = path[i].zero_fraction;
        incoming_one = path[i].one_fraction;
        unwind(path, i);
        break;
      }
    }

    const double cover = static_cast<double>(node.sample_count);
    const double hot_fraction = static_cast<double>(tree_.nodes[hot].sample_count) / cover;
    const double cold_fraction = static_cast<double>(tree_.nodes[cold].sample_count) / cover;
    recurse(hot, path, incoming_zero * hot_fraction, incoming_one, node.feature);
    recurse(cold, std::move(path), incoming_zero * cold_fraction, 0.0, node.feature);
  }

  const Tree& tree_;
  std::span<const double> x_;
  int class_index_;
  std::span<double> phi_;
};

void check_inputs(const Forest& forest, std::size_t n_values, int class_index) {
  if (n_values != forest.n_features) {
    throw InvalidArgument(fmt::format("instance has {} features, model expects {}",
                                      n_values, forest.n_features));
  }
  if (class_index < 0 || class_index >= forest.n_classes) {
    throw InvalidArgument(
        fmt::format("class index {} outside [0, {})", class_index, forest.n_classes));
  }
  if (forest.trees.empty()) throw InvalidArgument("forest has no trees");
  for (const Tree& tree : forest.trees) {
    if (!tree.has_sample_counts) {
      throw InvalidArgument("model lacks node_sample_count metadata required for attribution");
    }
  }
}

double expected_from(const Tree& tree, std::size_t index, int class_index) {
  const TreeNode& node = tree.nodes[index];
  if (node.is_leaf()) return leaf_value(node, class_index);
  const auto left = static_cast<std::size_t>(node.left);
  const auto right = static_cast<std::size_t>(node.right);
  const double cover = static_cast<double>(node.sample_count);
  return static_cast<double>(tree.nodes[left].sample_count) / cover *
             expected_from(tree, left, class_index) +
         static_cast<double>(tree.nodes[right].sample_count) / cover *
             expected_from(tree, right, class_index);
}

// Expected tree output when only the features in `known` take x's values.
double conditional_expectation(const Tree& tree, std::size_t index,
                               std::span<const double> x, std::uint32_t known,
                               int class_index) {
  const TreeNode& node = tree.nodes[index];
  if (node.is_leaf()) return leaf_value(node, class_index);
  const auto left = static_cast<std::size_t>(node.left);
  const auto right = static_cast<std::size_t>(node.right);
  if (known & (std::uint32_t{1} << node.feature)) {
    const auto next = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? left : right;
    return conditional_expectation(tree, next, x, known, class_index);
  }
  const double cover = static_cast<double>(node.sample_count);
  return static_cast<double>(tree.nodes[left].sample_count) / cover *
             conditional_expectation(tree, left, x, known, class_index) +
         static_cast<double>(tree.nodes[right].sample_count) / cover *
             conditional_expectation(tree, right, x, known, class_index);
}

}  // namespace

double expected_value(const Tree& tree, int class_index) {
  return expected_from(tree, 0, class_index);
}

Attribution tree_shap(const Tree& tree, std::size_t n_features,
                      std::span<const double> x, int class_index) {
  if (x.size() != n_features) {
    throw InvalidArgument(fmt::format("instance has {} features, tree expects {}",
                                      x.size(), n_features));
  }
  if (!tree.has_sample_counts) {
    throw InvalidArgument("tree lacks node_sample_count metadata required for attribution");
  }
  Attribution out;
  out.class_index = class_index;
  out.values.assign(n_features, 0.0);
  TreeShap(tree, x, class_index, out.values).run();
  out.base_value = expected_value(tree, class_index);
  return out;
}

Attribution tree_shap(const Forest& forest, const FeatureVector& x, int class_index) {
  check_inputs(forest, x.values.size(), class_index);
  Attribution out;
  out.instance_id = x.id;
  out.class_index = class_index;
  out.values.assign(forest.n_features, 0.0);
  for (const Tree& tree : forest.trees) {
    TreeShap(tree, x.values, class_index, out.values).run();
    out.base_value += expected_value(tree, class_index);
  }
  const double n_trees = static_cast<double>(forest.trees.size());
  for (double& v : out.values) v /= n_trees;
  out.base_value /= n_trees;
  return out;
}

Attribution brute_force_shap(const Forest& forest, const FeatureVector& x, int class_index) {
  check_inputs(forest, x.values.size(), class_index);
  const std::size_t d = forest.n_features;
  if (d > kBruteForceMaxFeatures) {
    throw InvalidArgument(fmt::format("brute_force_shap supports at most {} features, got {}",
                                      kBruteForceMaxFeatures, d));
  }
  const std::uint32_t n_subsets = std::uint32_t{1} << d;
  std::vector<double> value(n_subsets, 0.0);
  for (std::uint32_t mask = 0; mask < n_subsets; ++mask) {
    double sum = 0.0;
    for (const Tree& tree : forest.trees) {
      sum += conditional_expectation(tree, 0, x.values, mask, class_index);
    }
    value[mask] = sum / static_cast<double>(forest.trees.size());
  }

  // weight(s) = s! (d - s - 1)! / d! = 1 / (d * C(d - 1, s))
  std::vector<double> weight(d, 0.0);
  for (std::size_t s = 0; s < d; ++s) {
    double binom = 1.0;
    for (std::size_t k = 1; k <= s; ++k) {
      binom = binom * static_cast<double>(d - 1 - s + k) / static_cast<double>(k);
    }
    weight[s] = 1.0 / (static_cast<double>(d) * binom);
  }

  Attribution out;
  out.instance_id = x.id;
  out.class_index = class_index;
  out.values.assign(d, 0.0);
  out.base_value = value[0];
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint32_t bit = std::uint32_t{1} << i;
    double phi = 0.0;
    for (std::uint32_t mask = 0; mask < n_subsets; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      phi += weight[size] * (value[mask | bit] - value[mask]);
    }
    out.values[i] = phi;
  }
  return out;
}

std::vector<Attribution> explain_batch(const Forest& forest,
                                       std::span<const FeatureVector> batch,
                                       ClassSelection selection, int jobs) {
  const std::size_t per_instance =
      selection.policy == ClassPolicy::kAll ? static_cast<std::size_t>(forest.n_classes) : 1;
  std::vector<Attribution> out(batch.size() * per_instance);
  parallel_for(batch.size(), jobs, [&](std::size_t i) {
    const FeatureVector& x = batch[i];
    switch (selection.policy) {
      case ClassPolicy::kPredicted:
        out[i] = tree_shap(forest, x, predict(forest, x.values));
        break;
      case ClassPolicy::kFixed:
        out[i] = tree_shap(forest, x, selection.fixed_class);
        break;
      case ClassPolicy::kAll:
        for (std::size_t c = 0; c < per_instance; ++c) {
          out[i * per_instance + c] = tree_shap(forest, x, static_cast<int>(c));
        }
        break;
    }
  });
  return out;
}

void write_attributions_csv(std::ostream& out, std::span<const Attribution> batch) {
  std::size_t width = 0;
  for (const auto& a : batch) width = std::max(width, a.values.size());
  out << "id,class_index,base_value";
  for (std::size_t i = 0; i < width; ++i) out << ",s_" << i;
  out << '\n';
  for (const auto& a : batch) {
    out << a.instance_id << ',' << a.class_index << ',' << csv::format_double(a.base_value);
    for (double v : a.values) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

}  // namespace crimpxai
