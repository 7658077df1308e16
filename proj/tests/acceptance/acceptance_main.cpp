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

// Acceptance suite for the criteria that do not need the public dataset.
// Criteria 1-3 need the public curves and are run by acceptance_public.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <thread>

#include "criteria.hpp"
#include "crimpxai/csv.hpp"
#include "crimpxai/pipeline.hpp"
#include "crimpxai/random.hpp"
#include "svg_check.hpp"
#include "test_support.hpp"

namespace crimpxai::acceptance {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

constexpr double kShapTolerance = 1e-9;
constexpr double kLocalAccuracyTolerance = 1e-9;
constexpr double kScaleInvarianceTolerance = 1e-9;
constexpr double kSignalDrop = 0.30;
constexpr double kOtherDrop = 0.05;

int hardware_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

RunConfig synth_config(const fs::path& out, int signal_phase, std::size_t per_class,
                       int n_estimators, std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.out_dir = out;
  c.data.synth = SynthSpec::three_class(signal_phase, 0.01);
  c.data.synth_per_class = per_class;
  c.data.synth_seed = seed;
  c.split_seed = seed;
  c.random_seed = seed;
  c.hyperparams.n_estimators = n_estimators;
  c.jobs = hardware_jobs();
  return c;
}

Outcome shapley_oracle() {
  Rng rng(20240601);
  double worst = 0.0;
  std::size_t comparisons = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.below(12);
    const int k = 2 + static_cast<int>(rng.below(2));
    const auto p = testing::random_problem(rng, 16 + rng.below(80), d, k,
                                           2 + static_cast<int>(rng.below(8)));
    Hyperparams hp;
    hp.n_estimators = 1 + static_cast<int>(rng.below(5));
    hp.max_depth = MaxDepth::of(1 + static_cast<int>(rng.below(3)));
    hp.features_per_split = 1 + static_cast<int>(rng.below(d));
    hp.bootstrap = rng.below(2) == 0;
    const Forest forest = fit_forest(p.x, p.y, testing::names(k), hp, rng.next());
    for (int instance = 0; instance < 3; ++instance) {
      FeatureVector x{"x", std::vector<double>(d)};
      for (double& v : x.values) v = rng.uniform();
      const int cls = static_cast<int>(rng.below(static_cast<std::size_t>(k)));
      const Attribution fast = tree_shap(forest, x, cls);
      const Attribution brute = brute_force_shap(forest, x, cls);
      for (std::size_t j = 0; j < d; ++j) {
        worst = std::max(worst, std::abs(fast.values[j] - brute.values[j]));
      }
      worst = std::max(worst, std::abs(fast.base_value - brute.base_value));
      ++comparisons;
    }
  }
  return Outcome::check(worst <= kShapTolerance,
                        fmt::format("200 forests, {} instances, max |tree - brute| = {:.3g} "
                                    "(tol {:g})",
                                    comparisons, worst, kShapTolerance));
}

Outcome local_accuracy() {
  TempDir dir;
  const RunConfig c = synth_config(dir.path(), 3, 200, 100, 5);
  const PreparedData prepared = cmd_prepare(c);
  const TrainOutcome trained = cmd_train(c);
  std::map<std::string, const FeatureVector*> by_id;
  for (const auto& v : prepared.table.vectors) by_id[v.id] = &v;
  double worst = 0.0;
  std::size_t violations = 0;
  std::size_t checks = 0;
  for (const auto& id : prepared.split.test_ids) {
    const FeatureVector& x = *by_id.at(id);
    const auto proba = predict_proba(trained.forest, x.values);
    for (int cls = 0; cls < trained.forest.n_classes; ++cls) {
      const Attribution a = tree_shap(trained.forest, x, cls);
      double total = a.base_value;
      for (double v : a.values) total += v;
      const double err = std::abs(total - proba[static_cast<std::size_t>(cls)]);
      worst = std::max(worst, err);
      if (err > kLocalAccuracyTolerance) ++violations;
      ++checks;
    }
  }
  return Outcome::check(violations == 0,
                        fmt::format("{} instance-class pairs on the synthetic test set, {} "
                                    "violations, max error {:.3g} (tol {:g})",
                                    checks, violations, worst, kLocalAccuracyTolerance));
}

Outcome synthetic_explanations() {
  std::string detail;
  bool ok = true;
  for (int p : {2, 3}) {
    TempDir dir;
    const RunConfig c = synth_config(dir.path(), p, 200, 100, 1000 + static_cast<std::uint64_t>(p));
    cmd_prepare(c);
    const TrainOutcome trained = cmd_train(c);
    const ExplainOutcome explained = cmd_explain(c);
    const SelectivityStudy study = cmd_selectivity(c);

    std::string tops;
    for (const auto& row : explained.summary.rows) {
      if (row.label != "MISSING_STRANDS" && row.label != "CRIMPED_INSULATION") continue;
      ok = ok && row.highest_phase == p;
      tops += fmt::format(" {}:{}", row.label == "MISSING_STRANDS" ? "MS" : "CI",
                          row.highest_phase);
    }
    double signal_drop = 1.0;
    double other_drop = -1.0;
    for (const auto& r : study.results) {
      if (r.plan.phases.size() != 1) continue;
      const double drop = study.base_accuracy - r.test_accuracy;
      if (r.plan.phases[0] == p) {
        signal_drop = std::min(signal_drop, drop);
      } else {
        other_drop = std::max(other_drop, drop);
      }
    }
    ok = ok && signal_drop >= kSignalDrop && other_drop <= kOtherDrop;
    detail += fmt::format("{}p={}: test acc {:.3f}, top phase{}, min drop at {{{}}} {:.3f} "
                          "(>= {:.2f}), max drop elsewhere {:.3f} (<= {:.2f})",
                          detail.empty() ? "" : "; ", p, trained.metrics.accuracy, tops, p,
                          signal_drop, kSignalDrop, other_drop, kOtherDrop);
  }
  return Outcome::check(ok, detail);
}

Outcome enumeration() {
  const auto subsets = enumerate_phase_subsets();
  const auto plans = enumerate_plans();
  std::set<std::pair<std::vector<int>, ReplacementKind>> unique;
  for (const auto& plan : plans) unique.insert({plan.phases, plan.strategy.kind});
  const bool ok = subsets.size() == 14 && plans.size() == 42 && unique.size() == 42;
  return Outcome::check(ok, fmt::format("{} subsets, {} plans, {} distinct", subsets.size(),
                                        plans.size(), unique.size()));
}

Outcome determinism() {
  TempDir a;
  TempDir b;
  RunConfig ca = synth_config(a.path(), 2, 60, 40, 77);
  RunConfig cb = synth_config(b.path(), 2, 60, 40, 77);
  ca.jobs = 1;
  cb.jobs = std::max(4, hardware_jobs());
  cmd_report(ca);
  cmd_report(cb);
  std::vector<std::string> files{artifacts::kMetrics, "selectivity.csv"};
  for (const auto& entry : fs::directory_iterator(a.path() / artifacts::kSvgDir)) {
    files.push_back(std::string(artifacts::kSvgDir) + "/" + entry.path().filename().string());
  }
  std::size_t identical = 0;
  std::string first_diff;
  for (const auto& f : files) {
    const fs::path pb = b.path() / f;
    if (fs::exists(pb) && csv::read_file(a.path() / f) == csv::read_file(pb)) {
      ++identical;
    } else if (first_diff.empty()) {
      first_diff = f;
    }
  }
  const bool ok = identical == files.size() && files.size() > 2;
  return Outcome::check(ok, fmt::format("{}/{} artifacts byte-identical (jobs 1 vs {}){}",
                                        identical, files.size(), cb.jobs,
                                        first_diff.empty() ? "" : ", first diff: " + first_diff));
}

Outcome preprocessing() {
  Rng rng(9);
  std::size_t vectors = 0;
  std::size_t bad_shape = 0;
  std::size_t non_invariant = 0;
  double worst = 0.0;
  auto check_shape = [&](const FeatureVector& v) {
    ++vectors;
    const bool ok = v.values.size() == 500 &&
                    std::all_of(v.values.begin(), v.values.end(),
                                [](double x) { return x >= 0.0 && x <= 1.0; });
    if (!ok) ++bad_shape;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t length = 500 + rng.below(500);
    RawCurve c{"c", std::vector<double>(length), {}};
    double level = rng.normal() * 10.0;
    for (double& s : c.samples) {
      level += rng.normal();
      s = level;
    }
    PreprocessConfig cfg;
    cfg.invert = rng.below(2) == 1;
    cfg.window_start = rng.below(length - 500 + 1);
    const double a = std::pow(10.0, rng.uniform() * 6.0 - 3.0);
    const double b = (rng.uniform() - 0.5) * 2e3;
    RawCurve moved = c;
    for (double& s : moved.samples) s = a * s + b;
    const FeatureVector base = prepare(c, cfg);
    const FeatureVector other = prepare(moved, cfg);
    check_shape(base);
    check_shape(other);
    double diff = 0.0;
    for (std::size_t i = 0; i < base.values.size() && i < other.values.size(); ++i) {
      diff = std::max(diff, std::abs(base.values[i] - other.values[i]));
    }
    worst = std::max(worst, diff);
    if (diff > kScaleInvarianceTolerance) ++non_invariant;
  }
  const SynthDataset synth = synth_generate(SynthSpec::three_class(3, 0.01), 200, 4);
  for (const auto& rec : synth.data.records()) check_shape(prepare(rec.curve, {}));
  return Outcome::check(
      bad_shape == 0 && non_invariant == 0,
      fmt::format("{} vectors, {} outside length 500 / [0,1]; 1000 affine cases, {} "
                  "non-invariant, max diff {:.3g} (tol {:g})",
                  vectors, bad_shape, non_invariant, worst, kScaleInvarianceTolerance));
}

Outcome visualization() {
  Rng rng(31);
  const ColorRamp ramp;
  auto luma = [](const std::string& hex) {
    const auto channel = [&](int k) { return std::stoi(hex.substr(1 + 2 * k, 2), nullptr, 16); };
    return 0.299 * channel(0) + 0.587 * channel(1) + 0.114 * channel(2);
  };
  int failures = 0;
  std::string first_failure;
  for (int trial = 0; trial < 100; ++trial) {
    RenderSpec spec;
    spec.curve.id = "s" + std::to_string(trial);
    spec.curve.values.resize(500);
    for (double& v : spec.curve.values) v = rng.uniform();
    std::vector<double> attribution(500);
    for (double& v : attribution) v = rng.normal() * 1e-3;
    const PhaseImportance imp =
        phase_importance(slice(500, spec.boundaries), std::span<const double>(attribution));
    spec.weights = imp.weights;
    spec.top_phase = imp.top_phase;
    spec.predicted = "CLASS_" + std::to_string(rng.below(3));
    const std::string svg = render_svg(spec);

    std::string why;
    bool ok = testing::xml_well_formed(svg, &why);
    const auto pipes = testing::elements(svg, "<polygon class=\"pipe\"");
    ok = ok && pipes.size() == 4;
    if (ok) {
      std::size_t hottest = 0;
      for (std::size_t p = 1; p < 4; ++p) {
        if (luma(pipes[p].at("fill")) < luma(pipes[hottest].at("fill"))) hottest = p;
      }
      const auto max_weight = static_cast<std::size_t>(
          std::max_element(spec.weights.begin(), spec.weights.end()) - spec.weights.begin());
      ok = hottest == max_weight && pipes[max_weight].at("fill") == ramp.high.hex() &&
           static_cast<int>(max_weight) + 1 == spec.top_phase;
      const auto caption = testing::elements(svg, "<text id=\"caption\"");
      const auto text = testing::element_text(svg, "caption");
      ok = ok && caption.size() == 1 &&
           caption[0].at("data-phase") == std::to_string(spec.top_phase) && text &&
           text->find(std::string(kPhaseNames[static_cast<std::size_t>(spec.top_phase - 1)])) !=
               std::string::npos;
    }
    if (!ok) {
      ++failures;
      if (first_failure.empty()) first_failure = spec.curve.id + (why.empty() ? "" : ": " + why);
    }
  }
  return Outcome::check(failures == 0,
                        fmt::format("100 random specs, {} failures{}", failures,
                                    first_failure.empty() ? "" : " (first " + first_failure + ")"));
}

}  // namespace
}  // namespace crimpxai::acceptance

int main() {
  using namespace crimpxai::acceptance;
  Runner runner;
  const std::string gated = "needs the public dataset; run acceptance_public with "
                            "CRIMPXAI_PUBLIC_CONFIG set";
  runner.run(1, "End-to-end accuracy", [&] { return Outcome::skip(gated); });
  runner.run(2, "Selectivity ordering", [&] { return Outcome::skip(gated); });
  runner.run(3, "Phase-importance reproduction", [&] { return Outcome::skip(gated); });
  runner.run(4, "Shapley oracle equivalence", shapley_oracle);
  runner.run(5, "Local accuracy", local_accuracy);
  runner.run(6, "Synthetic explanation correctness", synthetic_explanations);
  runner.run(7, "Enumeration exactness", enumeration);
  runner.run(8, "Determinism", determinism);
  runner.run(9, "Preprocessing contract", preprocessing);
  runner.run(10, "Visualization contract", visualization);
  std::cout << fmt::format("{} criteria: {} failed, {} skipped", runner.total(), runner.failed(),
                           runner.skipped())
            << std::endl;
  return runner.failed() == 0 ? 0 : 1;
}
