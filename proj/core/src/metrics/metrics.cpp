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

#include "layerwise/metrics/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace layerwise::metrics {
namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts count_classes(std::span<const ScoredSample> samples) {
  Counts c;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) fail(ErrorCode::kInvalidArgument, "non-finite detection score");
    (s.label == Label::kGenerated ? c.pos : c.neg) += 1;
  }
  return c;
}

Counts require_both(std::span<const ScoredSample> samples, const char* what) {
  const Counts c = count_classes(samples);
  if (c.pos == 0 || c.neg == 0) fail(ErrorCode::kInvalidArgument, std::string(what) + " needs both classes present");
  return c;
}

// Indices sorted by score descending; equal scores keep input order.
std::vector<std::size_t> descending(std::span<const ScoredSample> samples) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return samples[a].score > samples[b].score; });
  return idx;
}

}  // namespace

std::vector<ScoredSample> from_similarities(std::span<const double> similarities, std::span<const Label> labels) {
  if (similarities.size() != labels.size()) fail(ErrorCode::kInvalidArgument, "similarities and labels differ in length");
  std::vector<ScoredSample> out(similarities.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {detection_score(similarities[k]), labels[k]};
  return out;
}

double auroc(std::span<const ScoredSample> samples) {
  const Counts c = require_both(samples, "AUROC");
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return samples[a].score < samples[b].score; });
  // Twice the rank sum keeps every average rank an integer.
  std::uint64_t twice_rank_sum = 0;
  std::size_t start = 0;
  while (start < idx.size()) {
    std::size_t end = start;
    std::size_t pos_in_group = 0;
    while (end < idx.size() && samples[idx[end]].score == samples[idx[start]].score) {
      pos_in_group += samples[idx[end]].label == Label::kGenerated;
      ++end;
    }
    // Ranks start+1 .. end share the average (start + 1 + end) / 2.
    twice_rank_sum += static_cast<std::uint64_t>(pos_in_group) * (start + 1 + end);
    start = end;
  }
  const std::uint64_t twice_u = twice_rank_sum - static_cast<std::uint64_t>(c.pos) * (c.pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double average_precision(std::span<const ScoredSample> samples) {
  const Counts c = count_classes(samples);
  if (c.pos == 0) fail(ErrorCode::kInvalidArgument, "average precision needs at least one positive");
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].score != samples[b].score) return samples[a].score > samples[b].score;
    return samples[a].label < samples[b].label;  // negatives first at equal scores
  });
  KahanSum sum;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < idx.size(); ++rank) {
    if (samples[idx[rank]].label != Label::kGenerated) continue;
    ++hits;
    sum.add(static_cast<double>(hits) / static_cast<double>(rank + 1));
  }
  return sum.value() / static_cast<double>(c.pos);
}

std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples) {
  const Counts c = require_both(samples, "ROC curve");
  const auto idx = descending(samples);
  std::vector<RocPoint> curve{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  std::size_t tp = 0, fp = 0, k = 0;
  while (k < idx.size()) {
    const double t = samples[idx[k]].score;
    while (k < idx.size() && samples[idx[k]].score == t) {
      (samples[idx[k]].label == Label::kGenerated ? tp : fp) += 1;
      ++k;
    }
    curve.push_back({static_cast<double>(fp) / static_cast<double>(c.neg),
                     static_cast<double>(tp) / static_cast<double>(c.pos), t});
  }
  return curve;
}

double trapezoid_area(std::span<const RocPoint> curve) {
  KahanSum area;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    area.add((curve[k].fpr - curve[k - 1].fpr) * (curve[k].tpr + curve[k - 1].tpr) / 2.0);
  }
  return area.value();
}

std::vector<PrPoint> pr_curve(std::span<const ScoredSample> samples) {
  const Counts c = count_classes(samples);
  if (c.pos == 0) fail(ErrorCode::kInvalidArgument, "PR curve needs at least one positive");
  const auto idx = descending(samples);
  std::vector<PrPoint> curve;
  std::size_t tp = 0, fp = 0, k = 0;
  while (k < idx.size()) {
    const double t = samples[idx[k]].score;
    while (k < idx.size() && samples[idx[k]].score == t) {
      (samples[idx[k]].label == Label::kGenerated ? tp : fp) += 1;
      ++k;
    }
    curve.push_back({static_cast<double>(tp) / static_cast<double>(c.pos),
                     static_cast<double>(tp) / static_cast<double>(tp + fp), t});
  }
  return curve;
}

std::string roc_csv(std::span<const RocPoint> curve) {
  std::string out = "fpr,tpr,threshold\n";
  for (const auto& p : curve) {
    out += format_double(p.fpr) + "," + format_double(p.tpr) + "," +
           (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) + "\n";
  }
  return out;
}

std::string pr_csv(std::span<const PrPoint> curve) {
  std::string out = "recall,precision,threshold\n";
  for (const auto& p : curve) {
    out += format_double(p.recall) + "," + format_double(p.precision) + "," + format_double(p.threshold) + "\n";
  }
  return out;
}

ThresholdPolicy ThresholdPolicy::parse(std::string_view text) {
  const std::string t = trim(text);
  if (t == "youden") return {PolicyKind::kYouden, 0.0};
  if (t == "balanced_accuracy") return {PolicyKind::kBalancedAccuracy, 0.0};
  const std::string prefix = "fixed_fpr(";
  if (t.rfind(prefix, 0) == 0 && t.size() > prefix.size() + 1 && t.back() == ')') {
    const std::string body = t.substr(prefix.size(), t.size() - prefix.size() - 1);
    double alpha = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), alpha);
    if (ec == std::errc() && ptr == body.data() + body.size() && alpha >= 0.0 && alpha <= 1.0) {
      return {PolicyKind::kFixedFpr, alpha};
    }
  }
  fail(ErrorCode::kInvalidArgument,
       "unknown threshold policy '" + t + "' (expected youden, balanced_accuracy or fixed_fpr(alpha))");
}

std::string ThresholdPolicy::to_string() const {
  switch (kind) {
    case PolicyKind::kYouden:
      return "youden";
    case PolicyKind::kBalancedAccuracy:
      return "balanced_accuracy";
    case PolicyKind::kFixedFpr:
      return "fixed_fpr(" + format_double(alpha) + ")";
  }
  return "unknown";
}

Rates rates_at(std::span<const double> similarities, std::span<const Label> labels, double tau) {
  if (similarities.size() != labels.size()) fail(ErrorCode::kInvalidArgument, "similarities and labels differ in length");
  std::size_t tp = 0, fp = 0, pos = 0, neg = 0;
  for (std::size_t k = 0; k < similarities.size(); ++k) {
    const bool flagged = predict_generated(similarities[k], tau);
    if (labels[k] == Label::kGenerated) {
      ++pos;
      tp += flagged;
    } else {
      ++neg;
      fp += flagged;
    }
  }
  Rates r;
  r.tpr = pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0;
  r.fpr = neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0;
  const std::size_t n = pos + neg;
  r.accuracy = n ? static_cast<double>(tp + (neg - fp)) / static_cast<double>(n) : 0.0;
  return r;
}

Threshold calibrate_threshold(std::span<const double> similarities, std::span<const Label> labels,
                              const ThresholdPolicy& policy) {
  if (similarities.size() != labels.size()) fail(ErrorCode::kInvalidArgument, "similarities and labels differ in length");
  std::vector<double> reals, fakes;
  for (std::size_t k = 0; k < similarities.size(); ++k) {
    if (!std::isfinite(similarities[k])) fail(ErrorCode::kInvalidArgument, "non-finite similarity");
    (labels[k] == Label::kGenerated ? fakes : reals).push_back(similarities[k]);
  }
  if (reals.empty() || fakes.empty()) fail(ErrorCode::kInvalidArgument, "threshold calibration needs both classes");
  std::sort(reals.begin(), reals.end());
  std::sort(fakes.begin(), fakes.end());

  double tau = 0.0;
  if (policy.kind == PolicyKind::kFixedFpr) {
    const auto n = reals.size();
    const auto allowed = static_cast<std::size_t>(std::floor(policy.alpha * static_cast<double>(n) + 1e-9));
    // S < tau is strict, so tau equal to the next real still leaves it unflagged.
    tau = allowed >= n ? 1.0 : reals[allowed];
  } else {
    std::vector<double> values(similarities.begin(), similarities.end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<double> candidates{-1.0};
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      // Adjacent doubles have no midpoint; the upper value separates them.
      const double mid = values[k] + (values[k + 1] - values[k]) / 2.0;
      candidates.push_back(mid > values[k] ? mid : values[k + 1]);
    }
    candidates.push_back(1.0);
    std::sort(candidates.begin(), candidates.end());
    // Both objectives are increasing in tp * n_neg - fp * n_pos; compare that exactly.
    const auto P = static_cast<std::int64_t>(fakes.size());
    const auto N = static_cast<std::int64_t>(reals.size());
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    for (double c : candidates) {
      const auto tp = static_cast<std::int64_t>(std::lower_bound(fakes.begin(), fakes.end(), c) - fakes.begin());
      const auto fp = static_cast<std::int64_t>(std::lower_bound(reals.begin(), reals.end(), c) - reals.begin());
      const std::int64_t objective = tp * N - fp * P;
      if (objective >= best) {
        best = objective;
        tau = c;
      }
    }
  }
  const Rates r = rates_at(similarities, labels, tau);
  return {tau, policy.to_string(), r.tpr, r.fpr};
}

MetricsReport report(std::span<const double> similarities, std::span<const Label> labels,
                     const std::optional<Threshold>& threshold) {
  const auto samples = from_similarities(similarities, labels);
  MetricsReport r;
  r.auroc = auroc(samples);
  r.ap = average_precision(samples);
  for (const auto& s : samples) (s.label == Label::kGenerated ? r.n_pos : r.n_neg) += 1;
  r.threshold = threshold;
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["auroc"] = auroc;
  j["ap"] = ap;
  j["n_pos"] = n_pos;
  j["n_neg"] = n_neg;
  if (threshold) {
    j["threshold"] = {{"tau", threshold->tau}, {"policy", threshold->policy}, {"tpr", threshold->tpr}, {"fpr", threshold->fpr}};
  } else {
    j["threshold"] = nullptr;
  }
  return j.dump(2) + "\n";
}

}  // namespace layerwise::metrics
