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

#include "crimpxai/feature_matrix.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "crimpxai/error.hpp"

namespace crimpxai {

FeatureMatrix FeatureMatrix::from_vectors(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) return {};
  const std::size_t cols = vectors.front().values.size();
  FeatureMatrix out(vectors.size(), cols);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != cols) {
      throw InvalidArgument(fmt::format(
          "feature vector '{}' has length {}, expected {}", vectors[i].id,
          vectors[i].values.size(), cols));
    }
    std::copy(vectors[i].values.begin(), vectors[i].values.end(),
              out.row(i).begin());
  }
  return out;
}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  FeatureMatrix out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != out.cols()) {
      throw InvalidArgument(fmt::format("row {} has length {}, expected {}", i,
                                        rows[i].size(), out.cols()));
    }
    std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace crimpxai
