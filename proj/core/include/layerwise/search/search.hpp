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

// Layer selection on a search subset and the thresholded decision that uses it.

#ifndef LAYERWISE_SEARCH_SEARCH_HPP_
#define LAYERWISE_SEARCH_SEARCH_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layerwise/backend/embedder.hpp"
#include "layerwise/backend/extract.hpp"
#include "layerwise/backend/store.hpp"
#include "layerwise/metrics/metrics.hpp"
#include "layerwise/perturb/perturb.hpp"
#include "layerwise/score/score.hpp"
#include "layerwise/search/detector_config.hpp"

namespace layerwise::search {

struct LayerSearch {
  int best_layer = 0;
  std::vector<int> layers;  // evaluated layers, ascending
  std::vector<double> auroc;
  std::vector<double> ap;
};

// argmax over `layers` (all layers when empty) of the AUROC of detection
// scores; the smallest layer wins ties. Throws kInvalidArgument for a
// single-class matrix or a layer outside 1..L.
LayerSearch search_layer(const score::ScoreMatrix& matrix, std::span<const int> layers = {});

// "1-12", "3,5,7-9" -> sorted unique indices in [lo, hi].
std::vector<int> parse_index_list(std::string_view text, int lo, int hi);
// "all" or a comma-separated list of kind names.
std::vector<perturb::PerturbationKind> parse_kind_list(std::string_view text);

struct SearchSpace {
  std::vector<int> layers;
  std::vector<perturb::PerturbationKind> kinds;
  std::vector<int> severities;

  // Non-empty axes, layers in 1..num_layers, severities in 1..8.
  void validate(int num_layers) const;
  // Sorted and deduplicated, kinds in canonical order.
  SearchSpace normalized() const;
  // "layers=1-24;kinds=defocus_blur;severities=7"
  std::string describe() const;

  // Every layer with one fixed perturbation.
  static SearchSpace layers_only(int num_layers, const perturb::PerturbationSpec& perturbation);
  // Every layer, kind and severity.
  static SearchSpace full(int num_layers);
};

struct SurfaceCell {
  perturb::PerturbationKind kind = perturb::PerturbationKind::kDefocusBlur;
  int severity = 0;
  int layer = 0;
  double auroc = 0.0;
  double ap = 0.0;
};

// Scores of one (kind, severity) cell plus the extraction bookkeeping the
// failure budget is checked against.
struct CellScores {
  score::ScoreMatrix matrix;
  std::size_t failures = 0;
  std::size_t attempted = 0;
};

using CellEvaluator = std::function<CellScores(const perturb::PerturbationSpec&)>;

struct SearchResult {
  std::vector<SurfaceCell> surface;  // kind order, then severity, then layer
  SurfaceCell best;
  std::size_t failures = 0;  // summed over cells
  std::size_t attempted = 0;

  // `kind,severity,layer,auroc,ap`
  std::string surface_csv() const;
};

// Evaluates every (kind, severity) cell with the same root seed. The argmax
// is the first cell in surface order with the highest AUROC, so ties go to
// the earlier kind, then the lower severity, then the lower layer. A cell
// whose failure fraction exceeds `max_failure_fraction` throws
// kBudgetExceeded.
SearchResult search_full(const SearchSpace& space, const CellEvaluator& evaluator, std::uint64_t seed,
                         double max_failure_fraction);

// Extracts perturbed embeddings for each cell, reusing cached originals.
CellEvaluator extractor_evaluator(const backend::PairExtractor& extractor, unsigned threads = 1);
// Looks cells up among precomputed stores by (kind, severity); kNotFound
// when a cell has no store. Stores must outlive the evaluator.
CellEvaluator store_evaluator(std::span<const backend::EmbeddingStore> stores, unsigned threads = 1);

// Records whose id is in `ids`; order preserved.
backend::EmbeddingStore restrict_store(const backend::EmbeddingStore& store, std::span<const std::string> ids);

struct Detection {
  std::string id;
  double similarity = 0.0;
  int label = 0;  // 1 = generated
};

// 1 iff similarity < tau.
inline int decide(double similarity, double tau) { return metrics::predict_generated(similarity, tau) ? 1 : 0; }

// Reads only row optimal_layer of each matrix.
Detection detect_pair(const std::string& id, const backend::LayerMatrix& original,
                      const backend::LayerMatrix& perturbed, const DetectorConfig& config);

// Embeds the image and its perturbed copy (seeded per image id, as during
// extraction) and decides at the configured layer.
Detection detect_image(const std::string& id, const perturb::Image& image, const DetectorConfig& config,
                       const backend::LayerEmbedder& model,
                       const perturb::SeveritySchedule& schedule = perturb::SeveritySchedule::builtin());

// One detection per image holding both variants, in store order.
std::vector<Detection> detect_store(const backend::EmbeddingStore& store, const DetectorConfig& config);

// {"id": ..., "similarity": ..., "label": ...}
std::string detection_json(const Detection& detection);

struct LayerMetrics {
  int layer = 0;
  double auroc = 0.0;
  double ap = 0.0;
};

struct Evaluation {
  std::vector<LayerMetrics> per_layer;
  int optimal_layer = 0;  // 0 without a config
  std::optional<metrics::MetricsReport> at_optimal;
  std::optional<metrics::Rates> rates;  // at the config's tau
};

// Per-layer AUROC/AP; with a config also the report and rates at its layer.
Evaluation evaluate(const score::ScoreMatrix& matrix, const DetectorConfig* config = nullptr);

// `layer,auroc,ap`
std::string per_layer_csv(const Evaluation& evaluation);

}  // namespace layerwise::search

#endif  // LAYERWISE_SEARCH_SEARCH_HPP_
