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

#include <string>

#include "layerwise/backend/store.hpp"
#include "layerwise/rng.hpp"
#include "layerwise/score/score.hpp"

namespace layerwise {
namespace {

// Store shaped like a ViT-L extraction: 24 layers x 1024 dims, both variants.
backend::EmbeddingStore vit_l_store(int images) {
  backend::EmbeddingStore s;
  s.header.model_name = "bench";
  s.header.layers = 24;
  s.header.dim = 1024;
  s.header.schedule_version = "ext8-v1";
  const CounterRng rng(5, RngStream::kGaussianNoise);
  std::uint64_t k = 0;
  for (int i = 0; i < images; ++i) {
    for (int v = 0; v < 2; ++v) {
      backend::StoreRecord r{"img" + std::to_string(i), i % 2 ? Label::kGenerated : Label::kReal,
                             static_cast<backend::Variant>(v), std::vector<float>(24 * 1024)};
      for (auto& x : r.values) x = static_cast<float>(rng.normal(k++));
      s.records.push_back(std::move(r));
    }
  }
  return s;
}

void BM_SerializeStore(benchmark::State& state) {
  const auto s = vit_l_store(static_cast<int>(state.range(0)));
  std::size_t bytes = 0;
  for (auto _ : state) {
    const std::string out = backend::serialize_store(s);
    bytes = out.size();
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_SerializeStore)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ParseStore(benchmark::State& state) {
  const std::string bytes = backend::serialize_store(vit_l_store(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(backend::parse_store(bytes));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_ParseStore)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ScoreStore(benchmark::State& state) {
  const auto s = vit_l_store(200);
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(score::score_store(s, threads));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_ScoreStore)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
}  // namespace layerwise
