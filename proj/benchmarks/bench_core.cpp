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

#include <benchmark/benchmark.h>

#include "crimpxai/dataset.hpp"
#include "crimpxai/feature_matrix.hpp"
#include "crimpxai/forest.hpp"
#include "crimpxai/preprocess.hpp"
#include "crimpxai/random.hpp"
#include "crimpxai/shapley.hpp"

namespace crimpxai {
namespace {

struct Problem {
  std::vector<FeatureVector> vectors;
  FeatureMatrix x;
  std::vector<int> y;
};

const Problem& problem() {
  static const Problem p = [] {
    Problem out;
    const SynthDataset ds = synth_generate(SynthSpec::three_class(3, 0.01), 100, 1);
    for (const auto& rec : ds.data.records()) {
      out.vectors.push_back(prepare(rec.curve, {}));
      out.y.push_back(class_index(rec.label, LabelMode::kMajor));
    }
    out.x = FeatureMatrix::from_vectors(out.vectors);
    return out;
  }();
  return p;
}

const std::vector<std::string> kNames = class_names(LabelMode::kMajor);

void BM_FitForest(benchmark::State& state) {
  const Problem& p = problem();
  Hyperparams hp;
  hp.n_estimators = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_forest(p.x, p.y, kNames, hp, 7, 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitForest)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_TreeShap(benchmark::State& state) {
  const Problem& p = problem();
  Hyperparams hp;
  hp.n_estimators = static_cast<int>(state.range(0));
  const Forest forest = fit_forest(p.x, p.y, kNames, hp, 7, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree_shap(forest, p.vectors[i++ % p.vectors.size()], 1));
  }
}
BENCHMARK(BM_TreeShap)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_BruteForceShap(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  FeatureMatrix x(200, d);
  std::vector<int> y(200);
  Rng rng(3);
  for (std::size_t r = 0; r < 200; ++r) {
    for (std::size_t j = 0; j < d; ++j) x(r, j) = rng.uniform();
    y[r] = static_cast<int>(rng.below(2));
  }
  Hyperparams hp;
  hp.n_estimators = 5;
  hp.max_depth = MaxDepth::of(3);
  const Forest forest = fit_forest(x, y, {"a", "b"}, hp, 1);
  const FeatureVector instance{"i", std::vector<double>(x.row(0).begin(), x.row(0).end())};
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_shap(forest, instance, 1));
}
BENCHMARK(BM_BruteForceShap)->Arg(8)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_Prepare(benchmark::State& state) {
  RawCurve raw{"r", std::vector<double>(3567), {}};
  Rng rng(2);
  for (double& v : raw.samples) v = rng.normal();
  const PreprocessConfig cfg{true, 1000, 500};
  for (auto _ : state) benchmark::DoNotOptimize(prepare(raw, cfg));
}
BENCHMARK(BM_Prepare);

}  // namespace
}  // namespace crimpxai

BENCHMARK_MAIN();
