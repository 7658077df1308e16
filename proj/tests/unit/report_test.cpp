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

#include <gtest/gtest.h>

#include "crimpxai/csv.hpp"
#include "crimpxai/error.hpp"
#include "crimpxai/report.hpp"
#include "svg_check.hpp"
#include "test_support.hpp"

namespace crimpxai {
namespace {

using testing::element_text;
using testing::elements;
using testing::TempDir;
using testing::xml_well_formed;

RenderSpec sample_spec() {
  RenderSpec spec;
  spec.curve.id = "c1";
  spec.curve.values.resize(500);
  for (std::size_t i = 0; i < 500; ++i) {
    spec.curve.values[i] = i < 345 ? static_cast<double>(i) / 344.0 : 0.2;
  }
  spec.weights = {0.0, 0.0, 1.0, 0.0};
  spec.top_phase = 3;
  spec.predicted = "CRIMPED_INSULATION";
  return spec;
}

TEST(ColorRamp, EndpointsAndClamp) {
  const ColorRamp ramp;
  EXPECT_EQ(ramp.at(0.0).hex(), "#ffffb2");
  EXPECT_EQ(ramp.at(1.0).hex(), "#bd0026");
  EXPECT_EQ(ramp.at(2.0), ramp.at(1.0));
  EXPECT_EQ(ramp.at(-1.0), ramp.at(0.0));
}

TEST(ColorRamp, MonotoneDarkening) {
  const ColorRamp ramp;
  auto luma = [](Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; };
  double prev = luma(ramp.at(0.0));
  for (int i = 1; i <= 100; ++i) {
    const double l = luma(ramp.at(i / 100.0));
    EXPECT_LE(l, prev);
    prev = l;
  }
}

TEST(RenderSvg, HotBandTitleCaptionAndLegend) {
  const std::string svg = render_svg(sample_spec());
  std::string why;
  EXPECT_TRUE(xml_well_formed(svg, &why)) << why;
  const auto pipes = elements(svg, "<polygon class=\"pipe\"");
  ASSERT_EQ(pipes.size(), 4u);
  EXPECT_EQ(pipes[2].at("fill"), "#bd0026");
  EXPECT_EQ(pipes[0].at("fill"), "#ffffb2");
  EXPECT_EQ(pipes[3].at("fill"), "#ffffb2");
  EXPECT_EQ(element_text(svg, "title"), "Predicted class: CRIMPED_INSULATION");
  EXPECT_EQ(element_text(svg, "caption"), "Most critical phase: (3) Compression");
  EXPECT_NE(svg.find("low influence"), std::string::npos);
  EXPECT_NE(svg.find("high influence"), std::string::npos);
  EXPECT_EQ(elements(svg, "<polyline id=\"curve\"").size(), 1u);
}

TEST(RenderSvg, BandsPartitionPlotWidth) {
  RenderSpec spec = sample_spec();
  const std::string svg = render_svg(spec);
  const auto pipes = elements(svg, "<polygon class=\"pipe\"");
  const double x0 = SvgStyle::kMarginLeft;
  const double w = spec.width - SvgStyle::kMarginLeft - SvgStyle::kMarginRight;
  const std::array<double, 5> edges{0, 75, 150, 345, 500};
  for (std::size_t p = 0; p < 4; ++p) {
    EXPECT_NEAR(std::stod(pipes[p].at("data-x-begin")), x0 + edges[p] * w / 500, 0.006);
    EXPECT_NEAR(std::stod(pipes[p].at("data-x-end")), x0 + edges[p + 1] * w / 500, 0.006);
    if (p > 0) {
      EXPECT_EQ(pipes[p].at("data-x-begin"), pipes[p - 1].at("data-x-end"));
    }
  }
}

TEST(RenderSvg, DeterministicAndEscaped) {
  RenderSpec spec = sample_spec();
  spec.predicted = "A<&>\"B";
  const std::string a = render_svg(spec);
  EXPECT_EQ(a, render_svg(spec));
  std::string why;
  EXPECT_TRUE(xml_well_formed(a, &why)) << why;
}

TEST(RenderSvg, RejectsDegenerateSpecs) {
  RenderSpec spec = sample_spec();
  spec.width = 0;
  EXPECT_THROW(render_svg(spec), InvalidArgument);
  spec = sample_spec();
  spec.height = 10;
  EXPECT_THROW(render_svg(spec), InvalidArgument);
  spec = sample_spec();
  spec.top_phase = 5;
  EXPECT_THROW(render_svg(spec), InvalidArgument);
  spec = sample_spec();
  spec.curve.values.resize(400);
  EXPECT_THROW(render_svg(spec), InvalidArgument);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(EmitRunReport, WritesFilesAndIndex) {
  TempDir dir;
  const std::vector<ReportFile> files{{"b/two.txt", "2"}, {"a.txt", "abc"}};
  const EmitResult r = emit_run_report(dir.path(), files);
  EXPECT_TRUE(r.ok());
  ASSERT_EQ(r.written.size(), 2u);
  EXPECT_EQ(r.written[0].path, "a.txt");
  EXPECT_EQ(r.written[0].sha256, sha256_hex("abc"));
  EXPECT_EQ(r.written[0].bytes, 3u);
  const auto index = nlohmann::json::parse(csv::read_file(dir / kReportIndexName));
  EXPECT_EQ(index.at("files").size(), 2u);
  EXPECT_EQ(index.at("files")[1].at("path"), "b/two.txt");
  const EmitResult again = emit_run_report(dir.path(), files);
  EXPECT_EQ(csv::read_file(dir / kReportIndexName), index.dump(2) + "\n");
  (void)again;
}

TEST(EmitRunReport, EmptySampleStillIndexes) {
  TempDir dir;
  const EmitResult r = emit_run_report(dir.path(), std::span<const ReportFile>{});
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.written.empty());
  const auto index = nlohmann::json::parse(csv::read_file(dir / kReportIndexName));
  EXPECT_TRUE(index.at("files").empty());
}

TEST(EmitRunReport, ReportsPerFileFailures) {
  TempDir dir;
  csv::write_file(dir / "blocker", "x");
  const std::vector<ReportFile> files{{"blocker/inner.txt", "1"}, {"ok.txt", "2"}};
  const EmitResult r = emit_run_report(dir.path(), files);
  EXPECT_EQ(r.errors.size(), 1u);
  ASSERT_EQ(r.written.size(), 1u);
  EXPECT_EQ(r.written[0].path, "ok.txt");
}

}  // namespace
}  // namespace crimpxai
