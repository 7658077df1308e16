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

#ifndef CRIMPXAI_REPORT_HPP_
#define CRIMPXAI_REPORT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crimpxai/phases.hpp"
#include "crimpxai/preprocess.hpp"

namespace crimpxai {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  std::string hex() const;  // "#rrggbb"
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Linear interpolation between a light low-influence color and a dark
// high-influence color; lightness decreases monotonically with weight.
struct ColorRamp {
  Rgb low{255, 255, 178};
  Rgb high{189, 0, 38};

  // w is clamped to [0, 1].
  Rgb at(double w) const;
};

struct RenderSpec {
  FeatureVector curve;
  std::array<double, 4> weights{};
  std::string predicted;
  int top_phase = 1;
  PhaseBoundaries boundaries;
  int width = 900;
  int height = 420;
  ColorRamp ramp;
};

// Layout constants shared by every rendered figure.
struct SvgStyle {
  static constexpr int kMarginLeft = 60;
  static constexpr int kMarginRight = 20;
  static constexpr int kMarginTop = 64;
  static constexpr int kMarginBottom = 72;
  static constexpr double kPipeHalfWidth = 0.06;  // fraction of plot height
  static constexpr double kPipeOpacity = 0.8;
  static constexpr const char* kFont = "DejaVu Sans, Arial, sans-serif";
  static constexpr const char* kCurveColor = "#1a1a1a";
};

// Standalone SVG 1.1 document: the curve, one color-graded pipe polygon per
// phase (data-phase/data-weight attributes), the predicted class as title, the
// top phase as caption and a low/high influence legend. Identical specs give
// identical bytes. Throws InvalidArgument for a canvas without plot area.
std::string render_svg(const RenderSpec& spec);

std::string sha256_hex(std::string_view data);

struct ReportFile {
  std::string relative_path;
  std::string contents;
};

struct ReportIndexEntry {
  std::string path;
  std::string sha256;
  std::size_t bytes = 0;
};

struct EmitResult {
  std::vector<ReportIndexEntry> written;  // sorted by path
  std::vector<std::string> errors;        // one per failed file
  bool ok() const { return errors.empty(); }
};

inline constexpr const char* kReportIndexName = "index.json";

// Writes every file under `dir` and an index.json listing relative paths with
// SHA-256 checksums. Failures are collected per file.
EmitResult emit_run_report(const std::filesystem::path& dir,
                           std::span<const ReportFile> files);

// Index over files already present in `dir` (recursively, excluding the index
// itself).
EmitResult index_directory(const std::filesystem::path& dir);

}  // namespace crimpxai

#endif  // CRIMPXAI_REPORT_HPP_
