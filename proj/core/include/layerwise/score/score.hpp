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

#ifndef LAYERWISE_SCORE_SCORE_HPP_
#define LAYERWISE_SCORE_SCORE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "layerwise/backend/embedder.hpp"
#include "layerwise/backend/store.hpp"
#include "layerwise/common.hpp"

namespace layerwise::score {

// <a, b> / (|a| |b|) accumulated in double and clamped to [-1, 1]. A zero
// vector or a length mismatch throws kInvalidArgument.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct PairScoreRow {
  std::string id;
  Label label = Label::kReal;
  std::vector<double> similarities;  // index k is layer k + 1

  friend bool operator==(const PairScoreRow&, const PairScoreRow&) = default;
};

struct ScoreMatrix {
  int layers = 0;
  std::vector<PairScoreRow> rows;

  // Uniform length, unique ids. Throws kInvalidArgument.
  void validate() const;
  std::size_t count(Label label) const;
  // Similarities of one 1-based layer across rows.
  std::vector<double> column(int layer) const;
  std::vector<Label> labels() const;
};

PairScoreRow pair_scores(const std::string& id, Label label, const backend::LayerMatrix& original,
                         const backend::LayerMatrix& perturbed);

struct SkippedImage {
  std::string id;
  std::string reason;
};

struct ScoredStore {
  ScoreMatrix matrix;
  std::vector<SkippedImage> skipped;
};

// One row per id holding both variants, in order of first appearance.
ScoredStore score_store(const backend::EmbeddingStore& store, unsigned threads = 1);

struct MeanProfile {
  int layers = 0;
  std::optional<std::vector<double>> real;  // absent when the class has no rows
  std::optional<std::vector<double>> fake;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
};

// Compensated per-layer means by class.
MeanProfile mean_profile(const ScoreMatrix& matrix);

struct Histogram {
  int layer = 0;
  std::vector<double> edges;  // bins + 1 equal-width edges spanning [-1, 1]
  std::vector<std::size_t> real;
  std::vector<std::size_t> fake;
};

// Bin k covers [edge_k, edge_k+1); the last bin is closed so 1.0 lands in it.
Histogram histogram(const ScoreMatrix& matrix, int layer, int bins);
std::size_t histogram_bin(double value, int bins);

std::string score_matrix_csv(const ScoreMatrix& matrix);
std::string mean_profile_csv(const MeanProfile& profile);
std::string histogram_csv(const Histogram& histogram);

}  // namespace layerwise::score

#endif  // LAYERWISE_SCORE_SCORE_HPP_
