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

#ifndef LAYERWISE_INTDIM_KNN_HPP_
#define LAYERWISE_INTDIM_KNN_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace layerwise::intdim {

// N points in R^d, row-major.
struct PointCloud {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> coords;

  PointCloud() = default;
  PointCloud(std::size_t points, std::size_t dims, std::vector<double> values);

  std::span<const double> point(std::size_t i) const { return {coords.data() + i * d, d}; }
};

// Squared Euclidean distances to the first and second nearest other point.
// Ties between neighbors resolve to the lower index.
struct TwoNeighbors {
  std::vector<double> r1_sq;
  std::vector<double> r2_sq;
  std::vector<std::size_t> i1;
  std::vector<std::size_t> i2;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

// Exact O(N^2 d) scan.
TwoNeighbors two_nearest_brute(const PointCloud& cloud, unsigned threads = 1);
// Exact kd-tree search; returns the same distances as the brute-force scan.
TwoNeighbors two_nearest_kdtree(const PointCloud& cloud);

enum class KnnMethod { kAuto, kBruteForce, kKdTree };

// kAuto: brute force up to 5000 points, kd-tree above that when d <= 16.
TwoNeighbors two_nearest(const PointCloud& cloud, KnnMethod method = KnnMethod::kAuto, unsigned threads = 1);

}  // namespace layerwise::intdim

#endif  // LAYERWISE_INTDIM_KNN_HPP_
