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

#ifndef LAYERWISE_METRICS_METRICS_HPP_
#define LAYERWISE_METRICS_METRICS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layerwise/common.hpp"

namespace layerwise::metrics {

// Higher score = more likely generated.
struct ScoredSample {
  double score = 0.0;
  Label label = Label::kReal;
};

// The only place similarity becomes a detection score: low similarity is
// evidence of a generated image.
inline double detection_score(double similarity) { return -similarity; }

std::vector<ScoredSample> from_similarities(std::span<const double> similarities, std::span<const Label> labels);

// Mann-Whitney statistic from average ranks; ties count one half.
// Throws kInvalidArgument unless both classes are present.
double auroc(std::span<const ScoredSample> samples);

// Mean precision at each positive's rank. Scores sorted descending; at equal
// scores negatives rank ahead of positives (the pessimistic order).
double average_precision(std::span<const ScoredSample> samples);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // score >= threshold is called positive
};

// One point per distinct score, descending, framed by (0, 0) and (1, 1).
std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples);
double trapezoid_area(std::span<const RocPoint> curve);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
};

// One point per distinct score, descending (recall non-decreasing).
std::vector<PrPoint> pr_curve(std::span<const ScoredSample> samples);

std::string roc_csv(std::span<const RocPoint> curve);
std::string pr_csv(std::span<const PrPoint> curve);

enum class PolicyKind { kYouden, kFixedFpr, kBalancedAccuracy };

struct ThresholdPolicy {
  PolicyKind kind = PolicyKind::kYouden;
  double alpha = 0.0;  // fixed_fpr only

  // "youden", "balanced_accuracy", "fixed_fpr(0.05)".
  static ThresholdPolicy parse(std::string_view text);
  std::string to_string() const;
};

struct Threshold {
  double tau = 0.0;
  std::string policy;
  double tpr = 0.0;  // on the calibration set, generated = positive
  double fpr = 0.0;

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

// Eq. 2 decision: generated iff similarity < tau (strict).
inline bool predict_generated(double similarity, double tau) { return similarity < tau; }

// Selects tau over similarity values (not detection scores). youden and
// balanced_accuracy scan midpoints between adjacent distinct similarities
// plus the outer values -1 and 1, keeping the larger tau on ties.
// fixed_fpr(alpha) returns the (floor(alpha * n_real) + 1)-th smallest real
// similarity: under the strict rule it is the largest tau meeting
// FPR <= alpha. Returns 1 when every real may be flagged.
Threshold calibrate_threshold(std::span<const double> similarities, std::span<const Label> labels,
                              const ThresholdPolicy& policy);

struct Rates {
  double tpr = 0.0;
  double fpr = 0.0;
  double accuracy = 0.0;
};

Rates rates_at(std::span<const double> similarities, std::span<const Label> labels, double tau);

struct MetricsReport {
  double auroc = 0.0;
  double ap = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<Threshold> threshold;

  // {auroc, ap, n_pos, n_neg, threshold: {tau, policy, tpr, fpr}}
  std::string to_json() const;
};

MetricsReport report(std::span<const double> similarities, std::span<const Label> labels,
                     const std::optional<Threshold>& threshold = std::nullopt);

}  // namespace layerwise::metrics

#endif  // LAYERWISE_METRICS_METRICS_HPP_
