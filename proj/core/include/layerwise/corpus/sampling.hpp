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

#ifndef LAYERWISE_CORPUS_SAMPLING_HPP_
#define LAYERWISE_CORPUS_SAMPLING_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "layerwise/corpus/manifest.hpp"

namespace layerwise::corpus {

inline constexpr std::string_view kSubsetSampler = "philox4x32-10/1 partial-fisher-yates";

// The search subset. Its size is a percentage of a reference dataset (usually
// the evaluation set), not of the manifest it is drawn from.
struct SampledSubset {
  std::string source;
  std::vector<ImageRecord> records;  // in source manifest order
  std::uint64_t seed = 0;
  double fraction_percent = 0.0;
  std::size_t reference_size = 0;
  bool balanced = true;

  std::vector<std::string> ids() const;
};

// round(k / 100 * reference_size).
std::size_t target_subset_size(double fraction_percent, std::size_t reference_size);

// Draws without replacement. The size is capped at the source size; in
// balanced mode at the largest draw whose class counts differ by at most 1.
// The class with more records gets ceil(size / 2) and the other
// floor(size / 2) (real wins a tie). Throws kInvalidArgument when the target
// rounds to zero or, in balanced mode, a class is empty.
SampledSubset sample_subset(const Manifest& manifest, double fraction_percent,
                            std::size_t reference_size, std::uint64_t seed, bool balanced = true);

// Reference size defaults to the manifest's own size.
SampledSubset sample_subset(const Manifest& manifest, double fraction_percent,
                            std::uint64_t seed, bool balanced = true);

// Sidecar JSON: {source, seed, fraction_percent, reference_size, ids, ...},
// plus the sampler identifier so runs can be replayed.
std::string subset_sidecar_json(const SampledSubset& subset);
void write_subset_sidecar(const SampledSubset& subset, const std::filesystem::path& path);

}  // namespace layerwise::corpus

#endif  // LAYERWISE_CORPUS_SAMPLING_HPP_
