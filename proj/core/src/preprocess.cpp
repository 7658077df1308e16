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

#include "crimpxai/preprocess.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "crimpxai/error.hpp"

namespace crimpxai {

nlohmann::json to_json(const PreprocessConfig& config) {
  return {{"invert", config.invert},
          {"window_start", config.window_start},
          {"window_len", config.window_len}};
}

PreprocessConfig preprocess_config_from_json(const nlohmann::json& json) {
  PreprocessConfig config;
  config.invert = json.value("invert", config.invert);
  config.window_start = json.value("window_start", config.window_start);
  config.window_len = json.value("window_len", config.window_len);
  if (config.window_len == 0) {
    throw InvalidArgument("preprocess.window_len must be positive");
  }
  return config;
}

RawCurve invert(const RawCurve& curve) {
  RawCurve out = curve;
  for (double& v : out.samples) v = -v;
  return out;
}

RawCurve zero_baseline(const RawCurve& curve) {
  if (curve.samples.empty()) {
    throw InvalidArgument(fmt::format("zero_baseline: curve '{}' is empty", curve.id));
  }
  RawCurve out = curve;
  const double lowest = *std::min_element(out.samples.begin(), out.samples.end());
  for (double& v : out.samples) v -= lowest;
  return out;
}

RawCurve window(const RawCurve& curve, const PreprocessConfig& config) {
  const std::size_t n = curve.samples.size();
  if (config.window_len == 0 || config.window_start > n ||
      config.window_len > n - config.window_start) {
    throw InvalidArgument(fmt::format(
        "window [{}, {}) exceeds curve '{}' of length {}", config.window_start,
        config.window_start + config.window_len, curve.id, n));
  }
  RawCurve out;
  out.id = curve.id;
  out.source_meta = curve.source_meta;
  const auto first = curve.samples.begin() +
                     static_cast<std::ptrdiff_t>(config.window_start);
  out.samples.assign(first, first + static_cast<std::ptrdiff_t>(config.window_len));
  return out;
}

FeatureVector minmax_scale(const RawCurve& curve) {
  if (curve.samples.empty()) {
    throw InvalidArgument(fmt::format("minmax_scale: curve '{}' is empty", curve.id));
  }
  const auto [lo_it, hi_it] =
      std::minmax_element(curve.samples.begin(), curve.samples.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  FeatureVector out;
  out.id = curve.id;
  out.values.resize(curve.samples.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < curve.samples.size(); ++i) {
      out.values[i] = (curve.samples[i] - lo) / range;
    }
  }
  return out;
}

FeatureVector prepare(const RawCurve& curve, const PreprocessConfig& config) {
  const RawCurve oriented = config.invert ? invert(curve) : curve;
  return minmax_scale(window(zero_baseline(oriented), config));
}

std::optional<std::size_t> propose_window_start(const RawCurve& curve,
                                                double threshold_fraction,
                                                std::size_t run) {
  if (curve.samples.empty() || run == 0) return std::nullopt;
  const RawCurve base = zero_baseline(curve);
  const double peak = *std::max_element(base.samples.begin(), base.samples.end());
  if (peak <= 0.0) return std::nullopt;
  const double threshold = threshold_fraction * peak;
  std::size_t streak = 0;
  for (std::size_t i = 0; i < base.samples.size(); ++i) {
    streak = base.samples[i] > threshold ? streak + 1 : 0;
    if (streak == run) return i + 1 - run;
  }
  return std::nullopt;
}

}  // namespace crimpxai
