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

#include "layerwise/intdim/twonn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "layerwise/common.hpp"
#include "layerwise/rng.hpp"

namespace layerwise::intdim {

PointCloud deduplicate(const PointCloud& cloud, std::size_t* removed) {
  std::vector<std::size_t> idx(cloud.n);
  std::iota(idx.begin(), idx.end(), 0);
  auto row_less = [&](std::size_t a, std::size_t b) {
    const auto pa = cloud.point(a), pb = cloud.point(b);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  };
  std::stable_sort(idx.begin(), idx.end(), row_less);
  std::vector<bool> keep(cloud.n, true);
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const auto a = cloud.point(idx[k - 1]), b = cloud.point(idx[k]);
    if (std::equal(a.begin(), a.end(), b.begin())) keep[idx[k]] = false;
  }
  // stable_sort keeps the first copy first within each group of equals.
  PointCloud out;
  out.d = cloud.d;
  for (std::size_t i = 0; i < cloud.n; ++i) {
    if (!keep[i]) continue;
    const auto p = cloud.point(i);
    out.coords.insert(out.coords.end(), p.begin(), p.end());
    ++out.n;
  }
  if (removed) *removed = cloud.n - out.n;
  return out;
}

std::size_t twonn_used_count(std::size_t n, double trim_fraction) {
  const auto dropped = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n) + 1e-9));
  return n - std::min(dropped, n);
}

IdEstimate twonn(const PointCloud& cloud, const TwoNnOptions& options) {
  if (!(options.trim_fraction >= 0.0 && options.trim_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "trim_fraction must lie in [0, 1)");
  }
  std::size_t removed = 0;
  const PointCloud unique = deduplicate(cloud, &removed);
  if (unique.n < 3) fail(ErrorCode::kInvalidArgument, "N >= 3 required (got " + std::to_string(unique.n) + " distinct points)");
  const TwoNeighbors nn = two_nearest(unique, options.knn, options.threads);
  std::vector<double> log_mu(unique.n);
  for (std::size_t i = 0; i < unique.n; ++i) {
    if (!(nn.r1_sq[i] > 0.0)) fail(ErrorCode::kInvalidArgument, "coincident points after deduplication");
    // ln(r2 / r1) from squared distances.
    log_mu[i] = 0.5 * (std::log(nn.r2_sq[i]) - std::log(nn.r1_sq[i]));
  }
  std::sort(log_mu.begin(), log_mu.end());
  const std::size_t n = unique.n;
  const std::size_t used = std::max<std::size_t>(twonn_used_count(n, options.trim_fraction), 1);

  IdEstimate est;
  est.n_used = used;
  est.n_points = n;
  est.duplicates_removed = removed;
  if (options.fit == TwoNnFit::kCensoredMle) {
    KahanSum s;
    for (std::size_t i = 0; i < used; ++i) s.add(log_mu[i]);
    s.add(static_cast<double>(n - used) * log_mu[used - 1]);
    if (!(s.value() > 0.0)) fail(ErrorCode::kInvalidArgument, "degenerate spacing: all neighbor ratios are 1");
    est.id_hat = static_cast<double>(used) / s.value();
  } else {
    KahanSum xy, xx;
    for (std::size_t i = 0; i < used; ++i) {
      const double x = log_mu[i];
      const double y = -std::log1p(-static_cast<double>(i + 1) / static_cast<double>(n + 1));
      xy.add(x * y);
      xx.add(x * x);
    }
    if (!(xx.value() > 0.0)) fail(ErrorCode::kInvalidArgument, "degenerate spacing: all neighbor ratios are 1");
    est.id_hat = xy.value() / xx.value();
  }
  return est;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n <= cap) return idx;
  const CounterRng rng(derive_seed(seed, "intdim/subsample"), RngStream::kIdSubsample);
  for (std::size_t k = 0; k < cap; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(k, n - k));
    std::swap(idx[k], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<LayerId> id_profile(const backend::EmbeddingStore& store, const IdProfileOptions& options) {
  std::vector<const backend::StoreRecord*> rows;
  for (const auto& r : store.records) {
    if (r.variant == options.variant) rows.push_back(&r);
  }
  if (rows.size() < 3) {
    fail(ErrorCode::kInvalidArgument, "intrinsic dimension needs >= 3 " + std::string(backend::to_string(options.variant)) +
                                          " records, store has " + std::to_string(rows.size()));
  }
  if (options.sample_cap < 3) fail(ErrorCode::kInvalidArgument, "sample_cap must be >= 3");
  const auto picked = subsample_indices(rows.size(), options.sample_cap, options.seed);
  const auto d = static_cast<std::size_t>(store.header.dim);
  std::vector<LayerId> profile;
  for (int l = 0; l < store.header.layers; ++l) {
    LayerId entry;
    entry.layer = l + 1;
    std::vector<double> coords;
    coords.reserve(picked.size() * d);
    for (std::size_t k : picked) {
      const auto& v = rows[k]->values;
      const auto begin = v.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(l) * d);
      coords.insert(coords.end(), begin, begin + static_cast<std::ptrdiff_t>(d));
    }
    try {
      entry.estimate = twonn(PointCloud(picked.size(), d, std::move(coords)), options.twonn);
    } catch (const Error& e) {
      entry.error = e.what();
    }
    profile.push_back(std::move(entry));
  }
  return profile;
}

std::string id_profile_csv(const std::vector<LayerId>& profile) {
  std::string out = "layer,id_hat,n_used\n";
  for (const auto& e : profile) {
    out += std::to_string(e.layer) + ",";
    if (e.estimate) out += format_double(e.estimate->id_hat) + "," + std::to_string(e.estimate->n_used);
    if (!e.estimate) out += ",";
    out += "\n";
  }
  return out;
}

}  // namespace layerwise::intdim
