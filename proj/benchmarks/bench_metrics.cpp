/*
 * Copyright 2026 The Layerwise Authors.
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

#include <vector>

#include "layerwise/metrics/metrics.hpp"
#include "layerwise/rng.hpp"

namespace layerwise {
namespace {

std::vector<metrics::ScoredSample> samples(std::size_t n, bool tied) {
  const CounterRng rng(7, RngStream::kSubsetSampling);
  std::vector<metrics::ScoredSample> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i].label = rng.below(2 * i, 2) ? Label::kGenerated : Label::kReal;
    s[i].score = tied ? static_cast<double>(rng.below(2 * i + 1, 16)) : rng.normal(2 * i + 1);
  }
  return s;
}

void BM_Auroc(benchmark::State& state) {
  const auto s = samples(static_cast<std::size_t>(state.range(0)), state.range(1) != 0);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::auroc(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->ArgsProduct({{1000, 100000}, {0, 1}});

void BM_AveragePrecision(benchmark::State& state) {
  const auto s = samples(static_cast<std::size_t>(state.range(0)), false);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::average_precision(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(100000);

void BM_CalibrateYouden(benchmark::State& state) {
  const auto s = samples(static_cast<std::size_t>(state.range(0)), false);
  std::vector<double> sim;
  std::vector<Label> labels;
  for (const auto& x : s) {
    sim.push_back(x.score);
    labels.push_back(x.label);
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::calibrate_threshold(sim, labels, {}));
}
BENCHMARK(BM_CalibrateYouden)->Arg(1000)->Arg(100000);

}  // namespace
}  // namespace layerwise
