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

// Slow, direct reference computations that the tests compare against.

#ifndef LAYERWISE_TESTS_SUPPORT_ORACLES_HPP_
#define LAYERWISE_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "layerwise/common.hpp"
#include "layerwise/metrics/metrics.hpp"
#include "layerwise/perturb/image.hpp"

namespace layerwise::testing {

// P(score_pos > score_neg) + P(equal) / 2 over every positive/negative pair.
inline double auroc_oracle(std::span<const metrics::ScoredSample> s) {
  std::int64_t wins2 = 0;
  std::int64_t pairs = 0;
  for (const auto& p : s) {
    if (p.label != Label::kGenerated) continue;
    for (const auto& n : s) {
      if (n.label != Label::kReal) continue;
      ++pairs;
      if (p.score > n.score) wins2 += 2;
      if (p.score == n.score) wins2 += 1;
    }
  }
  return static_cast<double>(wins2) / (2.0 * static_cast<double>(pairs));
}

// Precision at each positive with every equal-scored negative counted ahead.
inline double ap_oracle(std::span<const metrics::ScoredSample> s) {
  double total = 0.0;
  std::int64_t n_pos = 0;
  for (const auto& p : s) {
    if (p.label != Label::kGenerated) continue;
    ++n_pos;
    std::int64_t above_pos = 0;
    std::int64_t above_neg = 0;
    for (const auto& q : s) {
      if (q.label == Label::kGenerated && q.score > p.score) ++above_pos;
      if (q.label == Label::kReal && q.score >= p.score) ++above_neg;
    }
    // Tied positives take consecutive ranks after the tied negatives.
    std::int64_t tied_before = 0;
    for (const auto& q : s) {
      if (&q == &p) break;
      if (q.label == Label::kGenerated && q.score == p.score) ++tied_before;
    }
    const double rank_pos = static_cast<double>(above_pos + tied_before + 1);
    total += rank_pos / (rank_pos + static_cast<double>(above_neg));
  }
  return total / static_cast<double>(n_pos);
}

inline double cosine_oracle(std::span<const float> a, std::span<const float> b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(ab / std::sqrt(aa * bb));
}

// Balanced accuracy of the strict rule similarity < tau.
inline double balanced_accuracy_at(std::span<const double> sim, std::span<const Label> labels, double tau) {
  double tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    const bool flagged = sim[i] < tau;
    if (labels[i] == Label::kGenerated) {
      (flagged ? tp : fn) += 1;
    } else {
      (flagged ? fp : tn) += 1;
    }
  }
  return 0.5 * (tp / (tp + fn) + tn / (tn + fp));
}

// Best balanced accuracy over all real tau: the rule only changes just above
// each observed value, so those points plus one below the minimum suffice.
inline double best_balanced_accuracy(std::span<const double> sim, std::span<const Label> labels) {
  double best = balanced_accuracy_at(sim, labels, -std::numeric_limits<double>::infinity());
  for (double s : sim) {
    best = std::max(best, balanced_accuracy_at(sim, labels, std::nextafter(s, 2.0)));
  }
  return best;
}

inline double fpr_at(std::span<const double> sim, std::span<const Label> labels, double tau) {
  double fp = 0, n = 0;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    if (labels[i] != Label::kReal) continue;
    n += 1;
    if (sim[i] < tau) fp += 1;
  }
  return fp / n;
}

// Half-pixel bilinear resampling written as a clamped triangle filter.
inline double bilinear_oracle(const perturb::Image& img, int out_h, int out_w, int y, int x, int c) {
  auto src = [](int i, int in, int out) {
    const double s = (i + 0.5) * static_cast<double>(in) / out - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };
  const double sy = src(y, img.height(), out_h);
  const double sx = src(x, img.width(), out_w);
  double v = 0.0;
  for (int j = 0; j < img.height(); ++j) {
    const double wy = std::max(0.0, 1.0 - std::abs(sy - j));
    if (wy == 0.0) continue;
    for (int i = 0; i < img.width(); ++i) {
      const double wx = std::max(0.0, 1.0 - std::abs(sx - i));
      v += wy * wx * img.at(j, i, c);
    }
  }
  return v;
}

}  // namespace layerwise::testing

#endif  // LAYERWISE_TESTS_SUPPORT_ORACLES_HPP_
