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

#ifndef CRIMPXAI_PREPROCESS_HPP_
#define CRIMPXAI_PREPROCESS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crimpxai/dataset.hpp"

namespace crimpxai {

struct PreprocessConfig {
  bool invert = false;
  std::size_t window_start = 0;
  std::size_t window_len = 500;
};

nlohmann::json to_json(const PreprocessConfig& config);
PreprocessConfig preprocess_config_from_json(const nlohmann::json& json);

// Model input: the windowed curve min-max scaled into [0, 1].
struct FeatureVector {
  std::string id;
  std::vector<double> values;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Negates every sample (sensor mounted upside down).
RawCurve invert(const RawCurve& curve);

// Subtracts the curve minimum so the smallest sample is exactly 0.
RawCurve zero_baseline(const RawCurve& curve);

// Samples [window_start, window_start + window_len).
RawCurve window(const RawCurve& curve, const PreprocessConfig& config);

// (x - min) / (max - min); a constant curve maps to all zeros.
FeatureVector minmax_scale(const RawCurve& curve);

// invert (if configured) -> zero_baseline -> window -> minmax_scale.
FeatureVector prepare(const RawCurve& curve, const PreprocessConfig& config);

// First index where the baselined curve exceeds threshold_fraction * max for
// `run` consecutive samples. Intended as a starting point for choosing
// PreprocessConfig::window_start on a new machine.
std::optional<std::size_t> propose_window_start(const RawCurve& curve,
                                                double threshold_fraction = 0.02,
                                                std::size_t run = 5);

}  // namespace crimpxai

#endif  // CRIMPXAI_PREPROCESS_HPP_
