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

// Two-nearest-neighbor intrinsic dimension. For locally uniform data the
// ratio mu = r2 / r1 follows a Pareto law P(mu > x) = x^-d.

#ifndef LAYERWISE_INTDIM_TWONN_HPP_
#define LAYERWISE_INTDIM_TWONN_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "layerwise/backend/store.hpp"
#include "layerwise/intdim/knn.hpp"

namespace layerwise::intdim {

enum class TwoNnFit {
  // Maximum likelihood with the trimmed largest ratios treated as censored:
  // d = n_used / (sum_{i <= n_used} ln mu_(i) + (N - n_used) ln mu_(n_used)).
  kCensoredMle,
  // Least-squares slope through the origin of -ln(1 - i/(N+1)) on ln mu_(i).
  kLinearFit,
};

struct TwoNnOptions {
  double trim_fraction = 0.1;  // share of the largest ratios discarded
  TwoNnFit fit = TwoNnFit::kCensoredMle;
  KnnMethod knn = KnnMethod::kAuto;
  unsigned threads = 1;
};

struct IdEstimate {
  double id_hat = 0.0;
  std::size_t n_used = 0;
  std::size_t n_points = 0;            // after deduplication
  std::size_t duplicates_removed = 0;
};

// Exact duplicates (all coordinates equal) collapse to their first copy.
PointCloud deduplicate(const PointCloud& cloud, std::size_t* removed = nullptr);

// n_used = N - floor(trim_fraction * N).
std::size_t twonn_used_count(std::size_t n, double trim_fraction);

// Throws kInvalidArgument for N < 3 after deduplication ("N >= 3 required")
// or when every retained ratio is 1 ("degenerate spacing").
IdEstimate twonn(const PointCloud& cloud, const TwoNnOptions& options = {});

struct LayerId {
  int layer = 0;
  std::optional<IdEstimate> estimate;
  std::string error;  // set when this layer failed
};

struct IdProfileOptions {
  backend::Variant variant = backend::Variant::kOriginal;
  std::size_t sample_cap = 2000;
  std::uint64_t seed = 0;  // drives the subsample when the store is larger
  TwoNnOptions twonn;
};

// Row-index subsample shared by every layer, ascending.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap, std::uint64_t seed);

// One entry per layer; a failing layer records its error and the rest run.
std::vector<LayerId> id_profile(const backend::EmbeddingStore& store, const IdProfileOptions& options = {});

// `layer,id_hat,n_used`; failed layers have empty fields.
std::string id_profile_csv(const std::vector<LayerId>& profile);

}  // namespace layerwise::intdim

#endif  // LAYERWISE_INTDIM_TWONN_HPP_
