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

#include "layerwise/perturb/perturb.hpp"
#include "layerwise/rng.hpp"

namespace layerwise {
namespace {

perturb::Image noise_image(int size) {
  const CounterRng rng(3, RngStream::kImpulseNoise);
  std::vector<float> v(static_cast<std::size_t>(size) * static_cast<std::size_t>(size) * 3);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(rng.uniform(i));
  return perturb::Image(size, size, std::move(v));
}

// Every kind at severity 7 on a 224 x 224 image.
void BM_Perturb(benchmark::State& state) {
  const auto kind = perturb::kAllKinds[static_cast<std::size_t>(state.range(0))];
  const perturb::Image img = noise_image(224);
  const perturb::PerturbationSpec spec{kind, 7, 11};
  for (auto _ : state) benchmark::DoNotOptimize(perturb::apply(img, spec));
  state.SetLabel(std::string(perturb::to_string(kind)));
}
BENCHMARK(BM_Perturb)->DenseRange(0, 7)->Unit(benchmark::kMillisecond);

void BM_DefocusBySeverity(benchmark::State& state) {
  const perturb::Image img = noise_image(224);
  const perturb::PerturbationSpec spec{perturb::PerturbationKind::kDefocusBlur, static_cast<int>(state.range(0)), 0};
  for (auto _ : state) benchmark::DoNotOptimize(perturb::apply(img, spec));
}
BENCHMARK(BM_DefocusBySeverity)->DenseRange(1, 8)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace layerwise
