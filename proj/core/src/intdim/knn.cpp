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

#include "layerwise/intdim/knn.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "layerwise/common.hpp"
#include "layerwise/parallel.hpp"

namespace layerwise::intdim {

PointCloud::PointCloud(std::size_t points, std::size_t dims, std::vector<double> values)
    : n(points), d(dims), coords(std::move(values)) {
  if (coords.size() != n * d) fail(ErrorCode::kInvalidArgument, "point cloud size does not match n x d");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Best2 {
  double d1 = kInf, d2 = kInf;
  std::size_t i1 = 0, i2 = 0;

  static bool less(double da, std::size_t ia, double db, std::size_t ib) { return da < db || (da == db && ia < ib); }

  void offer(double dist, std::size_t j) {
    if (less(dist, j, d1, i1)) {
      d2 = d1;
      i2 = i1;
      d1 = dist;
      i1 = j;
    } else if (less(dist, j, d2, i2)) {
      d2 = dist;
      i2 = j;
    }
  }
};

TwoNeighbors pack(const std::vector<Best2>& best) {
  TwoNeighbors out;
  for (const auto& b : best) {
    out.r1_sq.push_back(b.d1);
    out.r2_sq.push_back(b.d2);
    out.i1.push_back(b.i1);
    out.i2.push_back(b.i2);
  }
  return out;
}

void require_three(const PointCloud& cloud) {
  if (cloud.n < 3) fail(ErrorCode::kInvalidArgument, "N >= 3 required (got " + std::to_string(cloud.n) + ")");
}

class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud) : cloud_(cloud), order_(cloud.n) {
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * cloud.n / kLeaf + 2);
    build(0, cloud.n, 0);
  }

  void query(std::size_t q, Best2& best) const { search(0, cloud_.point(q), q, best); }

 private:
  static constexpr std::size_t kLeaf = 16;

  struct Node {
    std::size_t begin = 0, end = 0;
    std::size_t axis = 0;
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end, 0, 0.0, -1, -1});
    if (end - begin <= kLeaf) return id;
    // Split on the widest axis at the median.
    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t a = 0; a < cloud_.d; ++a) {
      double lo = kInf, hi = -kInf;
      for (std::size_t k = begin; k < end; ++k) {
        const double v = cloud_.coords[order_[k] * cloud_.d + a];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > widest) {
        widest = hi - lo;
        axis = a;
      }
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                       return cloud_.coords[a * cloud_.d + axis] < cloud_.coords[b * cloud_.d + axis];
                     });
    const double split = cloud_.coords[order_[mid] * cloud_.d + axis];
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    nodes_[static_cast<std::size_t>(id)].axis = axis;
    nodes_[static_cast<std::size_t>(id)].split = split;
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  void search(int id, std::span<const double> q, std::size_t self, Best2& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::size_t k = node.begin; k < node.end; ++k) {
        const std::size_t j = order_[k];
        if (j != self) best.offer(squared_distance(q, cloud_.point(j)), j);
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    search(near, q, self, best);
    // Points on the far side are at least |diff| away along this axis; the
    // <= keeps equal-distance candidates reachable for the index tie-break.
    if (diff * diff <= best.d2) search(far, q, self, best);
  }

  const PointCloud& cloud_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace

TwoNeighbors two_nearest_brute(const PointCloud& cloud, unsigned threads) {
  require_three(cloud);
  std::vector<Best2> best(cloud.n);
  parallel_for(cloud.n, threads, [&](std::size_t i) {
    const auto p = cloud.point(i);
    Best2 b;
    for (std::size_t j = 0; j < cloud.n; ++j) {
      if (j != i) b.offer(squared_distance(p, cloud.point(j)), j);
    }
    best[i] = b;
  });
  return pack(best);
}

TwoNeighbors two_nearest_kdtree(const PointCloud& cloud) {
  require_three(cloud);
  const KdTree tree(cloud);
  std::vector<Best2> best(cloud.n);
  for (std::size_t i = 0; i < cloud.n; ++i) tree.query(i, best[i]);
  return pack(best);
}

TwoNeighbors two_nearest(const PointCloud& cloud, KnnMethod method, unsigned threads) {
  switch (method) {
    case KnnMethod::kBruteForce:
      return two_nearest_brute(cloud, threads);
    case KnnMethod::kKdTree:
      return two_nearest_kdtree(cloud);
    case KnnMethod::kAuto:
      break;
  }
  if (cloud.n > 5000 && cloud.d <= 16) return two_nearest_kdtree(cloud);
  return two_nearest_brute(cloud, threads);
}

}  // namespace layerwise::intdim
