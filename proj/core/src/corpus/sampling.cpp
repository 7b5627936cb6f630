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

#include "layerwise/corpus/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "layerwise/rng.hpp"

namespace layerwise::corpus {
namespace {

// Picks `take` of `pool` (indices into the manifest) by a partial
// Fisher-Yates shuffle driven by the counter RNG.
std::vector<std::size_t> draw(std::vector<std::size_t> pool, std::size_t take,
                              std::uint64_t seed, std::string_view label) {
  const CounterRng rng(derive_seed(seed, label), RngStream::kSubsetSampling);
  const std::size_t n = pool.size();
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(i, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

}  // namespace

std::vector<std::string> SampledSubset::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

std::size_t target_subset_size(double fraction_percent, std::size_t reference_size) {
  if (!(fraction_percent > 0.0) || !std::isfinite(fraction_percent)) {
    fail(ErrorCode::kInvalidArgument, "subset fraction must be > 0");
  }
  if (reference_size == 0) fail(ErrorCode::kInvalidArgument, "reference size must be > 0");
  return static_cast<std::size_t>(
      std::llround(fraction_percent / 100.0 * static_cast<double>(reference_size)));
}

SampledSubset sample_subset(const Manifest& manifest, double fraction_percent,
                            std::size_t reference_size, std::uint64_t seed, bool balanced) {
  const std::size_t target = target_subset_size(fraction_percent, reference_size);
  if (target == 0) {
    fail(ErrorCode::kInvalidArgument, "subset of " + format_double(fraction_percent) + "% of " +
                                          std::to_string(reference_size) + " rounds to 0 records");
  }
  const auto& records = manifest.records();
  std::vector<std::size_t> chosen;
  if (balanced) {
    std::vector<std::size_t> real_pool;
    std::vector<std::size_t> fake_pool;
    for (std::size_t i = 0; i < records.size(); ++i) {
      (records[i].label == Label::kReal ? real_pool : fake_pool).push_back(i);
    }
    const std::size_t small = std::min(real_pool.size(), fake_pool.size());
    if (small == 0) {
      fail(ErrorCode::kInvalidArgument, "balanced subset needs both classes; manifest '" + manifest.name() +
                                            "' has " + std::to_string(real_pool.size()) + " real and " +
                                            std::to_string(fake_pool.size()) + " generated records");
    }
    // Largest balanced draw the source supports.
    const std::size_t cap = 2 * small + (real_pool.size() != fake_pool.size() ? 1 : 0);
    const std::size_t size = std::min(target, cap);
    const std::size_t major = (size + 1) / 2;
    const std::size_t minor = size / 2;
    const bool real_major = real_pool.size() >= fake_pool.size();
    const std::size_t want_real = real_major ? major : minor;
    const std::size_t want_fake = real_major ? minor : major;
    chosen = draw(std::move(real_pool), want_real, seed, "subset/label=0");
    auto fakes = draw(std::move(fake_pool), want_fake, seed, "subset/label=1");
    chosen.insert(chosen.end(), fakes.begin(), fakes.end());
  } else {
    const std::size_t size = std::min(target, records.size());
    std::vector<std::size_t> pool(records.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    chosen = draw(std::move(pool), size, seed, "subset/all");
  }
  std::sort(chosen.begin(), chosen.end());

  SampledSubset subset;
  subset.source = manifest.name();
  subset.seed = seed;
  subset.fraction_percent = fraction_percent;
  subset.reference_size = reference_size;
  subset.balanced = balanced;
  subset.records.reserve(chosen.size());
  for (std::size_t i : chosen) subset.records.push_back(records[i]);
  return subset;
}

SampledSubset sample_subset(const Manifest& manifest, double fraction_percent,
                            std::uint64_t seed, bool balanced) {
  return sample_subset(manifest, fraction_percent, manifest.size(), seed, balanced);
}

std::string subset_sidecar_json(const SampledSubset& subset) {
  nlohmann::json j;
  j["source"] = subset.source;
  j["seed"] = subset.seed;
  j["fraction_percent"] = subset.fraction_percent;
  j["reference_size"] = subset.reference_size;
  j["balanced"] = subset.balanced;
  j["sampler"] = kSubsetSampler;
  j["toolkit_version"] = kToolkitVersion;
  j["ids"] = subset.ids();
  return j.dump(2) + "\n";
}

void write_subset_sidecar(const SampledSubset& subset, const std::filesystem::path& path) {
  write_file(path, subset_sidecar_json(subset));
}

}  // namespace layerwise::corpus
