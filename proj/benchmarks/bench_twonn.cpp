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

#include "layerwise/intdim/knn.hpp"
#include "layerwise/intdim/twonn.hpp"
#include "layerwise/rng.hpp"

namespace layerwise {
namespace {

intdim::PointCloud gaussian_cloud(std::size_t n, std::size_t d) {
  const CounterRng rng(9, RngStream::kIdSubsample);
  std::vector<double> v(n * d);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal(i);
  return intdim::PointCloud(n, d, std::move(v));
}

// The profile workload: 2000 points of a 1024-dim layer.
void BM_TwoNnBruteForce(benchmark::State& state) {
  const auto cloud = gaussian_cloud(2000, 1024);
  intdim::TwoNnOptions o;
  o.knn = intdim::KnnMethod::kBruteForce;
  o.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(intdim::twonn(cloud, o));
}
BENCHMARK(BM_TwoNnBruteForce)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_TwoNearestKdTree(benchmark::State& state) {
  const auto cloud = gaussian_cloud(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(intdim::two_nearest_kdtree(cloud));
}
BENCHMARK(BM_TwoNearestKdTree)->Arg(5000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_TwoNearestBruteLowDim(benchmark::State& state) {
  const auto cloud = gaussian_cloud(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(intdim::two_nearest_brute(cloud));
}
BENCHMARK(BM_TwoNearestBruteLowDim)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace layerwise
