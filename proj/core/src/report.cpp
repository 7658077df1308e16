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

#include "crimpxai/report.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "crimpxai/csv.hpp"
#include "crimpxai/error.hpp"

namespace crimpxai {

namespace fs = std::filesystem;

std::string Rgb::hex() const { return fmt::format("#{:02x}{:02x}{:02x}", r, g, b); }

Rgb ColorRamp::at(double w) const {
  const double t = std::clamp(std::isfinite(w) ? w : 0.0, 0.0, 1.0);
  auto lerp = [t](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(
        std::lround(static_cast<double>(a) + (static_cast<double>(b) - a) * t));
  };
  return {lerp(low.r, high.r), lerp(low.g, high.g), lerp(low.b, high.b)};
}

namespace {

std::string escape_xml(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const RenderSpec& spec) {
  using S = SvgStyle;
  const double plot_w = spec.width - S::kMarginLeft - S::kMarginRight;
  const double plot_h = spec.height - S::kMarginTop - S::kMarginBottom;
  if (spec.width <= 0 || spec.height <= 0 || plot_w <= 0 || plot_h <= 0) {
    throw InvalidArgument(fmt::format("canvas {}x{} leaves no plot area", spec.width,
                                      spec.height));
  }
  if (spec.top_phase < 1 || spec.top_phase > 4) {
    throw InvalidArgument(fmt::format("top phase {} outside 1..4", spec.top_phase));
  }
  const auto& v = spec.curve.values;
  const PhaseSlices slices = slice(v.size(), spec.boundaries);
  const double d = static_cast<double>(v.size());
  const double x0 = S::kMarginLeft;
  const double y0 = S::kMarginTop;

  auto edge_x = [&](std::size_t j) { return x0 + static_cast<double>(j) * plot_w / d; };
  auto point_x = [&](std::size_t i) { return x0 + (static_cast<double>(i) + 0.5) * plot_w / d; };
  auto value_y = [&](double value) {
    return y0 + (1.0 - std::clamp(value, 0.0, 1.0)) * plot_h;
  };
  auto edge_value = [&](std::size_t j) {
    if (j == 0) return v.front();
    if (j >= v.size()) return v.back();
    return 0.5 * (v[j - 1] + v[j]);
  };
  const double pipe = S::kPipeHalfWidth * plot_h;

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" "
      "height=\"{1}\" viewBox=\"0 0 {0} {1}\" font-family=\"{2}\">\n",
      spec.width, spec.height, S::kFont);
  out += "<defs>\n";
  out += fmt::format(
      "<linearGradient id=\"ramp\" x1=\"0\" y1=\"0\" x2=\"1\" y2=\"0\">"
      "<stop offset=\"0\" stop-color=\"{}\"/><stop offset=\"1\" stop-color=\"{}\"/>"
      "</linearGradient>\n",
      spec.ramp.low.hex(), spec.ramp.high.hex());
  out += "</defs>\n";
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
                     spec.width, spec.height);
  out += fmt::format(
      "<text id=\"title\" x=\"{:.2f}\" y=\"24\" font-size=\"18\" font-weight=\"bold\">"
      "Predicted class: {}</text>\n",
      x0, escape_xml(spec.predicted));
  out += fmt::format(
      "<text id=\"caption\" x=\"{:.2f}\" y=\"46\" font-size=\"14\" data-phase=\"{}\">"
      "Most critical phase: ({}) {}</text>\n",
      x0, spec.top_phase, spec.top_phase,
      kPhaseNames[static_cast<std::size_t>(spec.top_phase - 1)]);

  out += "<g id=\"pipes\" stroke=\"none\">\n";
  for (std::size_t p = 0; p < 4; ++p) {
    const IndexRange& r = slices.ranges[p];
    std::string points;
    auto add = [&](double x, double y) {
      if (!points.empty()) points += ' ';
      points += fmt::format("{:.2f},{:.2f}", x, y);
    };
    add(edge_x(r.begin), value_y(edge_value(r.begin)) - pipe);
    for (std::size_t i = r.begin; i < r.end; ++i) add(point_x(i), value_y(v[i]) - pipe);
    add(edge_x(r.end), value_y(edge_value(r.end)) - pipe);
    add(edge_x(r.end), value_y(edge_value(r.end)) + pipe);
    for (std::size_t i = r.end; i-- > r.begin;) add(point_x(i), value_y(v[i]) + pipe);
    add(edge_x(r.begin), value_y(edge_value(r.begin)) + pipe);
    out += fmt::format(
        "<polygon class=\"pipe\" data-phase=\"{}\" data-weight=\"{:.4f}\" "
        "data-x-begin=\"{:.2f}\" data-x-end=\"{:.2f}\" fill=\"{}\" fill-opacity=\"{}\" "
        "points=\"{}\"/>\n",
        p + 1, spec.weights[p], edge_x(r.begin), edge_x(r.end),
        spec.ramp.at(spec.weights[p]).hex(), S::kPipeOpacity, points);
  }
  out += "</g>\n";

  out += "<g id=\"phase-axis\" font-size=\"11\" fill=\"#555555\">\n";
  for (std::size_t p = 0; p < 4; ++p) {
    const IndexRange& r = slices.ranges[p];
    if (p > 0) {
      out += fmt::format(
          "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" "
          "stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
          edge_x(r.begin), y0, y0 + plot_h);
    }
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">({})</text>\n",
                       0.5 * (edge_x(r.begin) + edge_x(r.end)), y0 + plot_h + 16, p + 1);
  }
  out += "</g>\n";
  out += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" "
      "stroke=\"#666666\"/>\n",
      x0, y0, plot_w, plot_h);

  std::string curve;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) curve += ' ';
    curve += fmt::format("{:.2f},{:.2f}", point_x(i), value_y(v[i]));
  }
  out += fmt::format(
      "<polyline id=\"curve\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" "
      "points=\"{}\"/>\n",
      S::kCurveColor, curve);

  const double legend_y = spec.height - 26.0;
  const double legend_w = std::min(200.0, plot_w / 2);
  out += "<g id=\"legend\" font-size=\"11\">\n";
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">low influence</text>\n", x0,
                     legend_y + 11);
  out += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"12\" fill=\"url(#ramp)\" "
      "stroke=\"#666666\"/>\n",
      x0 + 80, legend_y, legend_w);
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">high influence</text>\n",
                     x0 + 88 + legend_w, legend_y + 11);
  out += "</g>\n";
  out += "</svg>\n";
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

namespace {

void write_index(const fs::path& dir, EmitResult& result) {
  std::sort(result.written.begin(), result.written.end(),
            [](const auto& a, const auto& b) { return a.path < b.path; });
  nlohmann::json files = nlohmann::json::array();
  for (const auto& entry : result.written) {
    files.push_back({{"path", entry.path}, {"sha256", entry.sha256}, {"bytes", entry.bytes}});
  }
  const nlohmann::json index = {{"files", files}, {"errors", result.errors}};
  try {
    csv::write_file(dir / kReportIndexName, index.dump(2) + "\n");
  } catch (const IoError& e) {
    result.errors.push_back(e.what());
  }
}

}  // namespace

EmitResult emit_run_report(const fs::path& dir, std::span<const ReportFile> files) {
  EmitResult result;
  for (const ReportFile& file : files) {
    try {
      csv::write_file(dir / file.relative_path, file.contents);
      result.written.push_back({file.relative_path, sha256_hex(file.contents),
                                file.contents.size()});
    } catch (const Error& e) {
      result.errors.push_back(file.relative_path + ": " + e.what());
    }
  }
  write_index(dir, result);
  return result;
}

EmitResult index_directory(const fs::path& dir) {
  EmitResult result;
  if (!fs::is_directory(dir)) {
    result.errors.push_back("not a directory: " + dir.string());
    return result;
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == kReportIndexName) continue;
    try {
      const std::string contents = csv::read_file(entry.path());
      result.written.push_back({rel, sha256_hex(contents), contents.size()});
    } catch (const Error& e) {
      result.errors.push_back(rel + ": " + e.what());
    }
  }
  write_index(dir, result);
  return result;
}

}  // namespace crimpxai
