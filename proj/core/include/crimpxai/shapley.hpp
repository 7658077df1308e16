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

#ifndef CRIMPXAI_SHAPLEY_HPP_
#define CRIMPXAI_SHAPLEY_HPP_

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crimpxai/forest.hpp"
#include "crimpxai/preprocess.hpp"

namespace crimpxai {

// Per-feature Shapley values of one class probability for one instance.
// base_value + sum(values) equals the explained probability.
struct Attribution {
  std::string instance_id;
  int class_index = 0;
  std::vector<double> values;
  double base_value = 0.0;
};

// Path-dependent TreeSHAP: features outside a coalition are marginalized by
// following both children weighted by their training sample counts. Runs in
// O(leaves * depth^2) per tree. The forest result is the mean over trees.
// Throws InvalidArgument on a dimension mismatch, an invalid class or trees
// without node sample counts.
Attribution tree_shap(const Forest& forest, const FeatureVector& x, int class_index);
Attribution tree_shap(const Tree& tree, std::size_t n_features,
                      std::span<const double> x, int class_index);

// Expected leaf value of `tree` under the training routing proportions.
double expected_value(const Tree& tree, int class_index);

// Direct evaluation of the Shapley formula over all 2^D coalitions, with the
// same marginalization as tree_shap. Reference implementation for tests;
// throws InvalidArgument when D > kBruteForceMaxFeatures.
inline constexpr std::size_t kBruteForceMaxFeatures = 20;
Attribution brute_force_shap(const Forest& forest, const FeatureVector& x, int class_index);

enum class ClassPolicy { kPredicted, kFixed, kAll };

struct ClassSelection {
  ClassPolicy policy = ClassPolicy::kPredicted;
  int fixed_class = 0;
};

// One attribution per instance (per class and instance for kAll, classes in
// index order), in input order.
std::vector<Attribution> explain_batch(const Forest& forest,
                                       std::span<const FeatureVector> batch,
                                       ClassSelection selection, int jobs = 1);

// Columns id,class_index,base_value,s_0..s_{D-1}.
void write_attributions_csv(std::ostream& out, std::span<const Attribution> batch);

}  // namespace crimpxai

#endif  // CRIMPXAI_SHAPLEY_HPP_
