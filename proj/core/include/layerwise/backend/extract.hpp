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

#ifndef LAYERWISE_BACKEND_EXTRACT_HPP_
#define LAYERWISE_BACKEND_EXTRACT_HPP_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layerwise/backend/embedder.hpp"
#include "layerwise/backend/store.hpp"
#include "layerwise/corpus/manifest.hpp"
#include "layerwise/perturb/perturb.hpp"

namespace layerwise::backend {

// Stochastic perturbations are keyed per image: seed = derive_seed(root, id).
perturb::PerturbationSpec per_image_spec(const perturb::PerturbationSpec& root, std::string_view image_id);

using ImageLoader = std::function<perturb::Image(const corpus::ImageRecord&)>;

struct ExtractOptions {
  perturb::PerturbationSpec perturbation = perturb::default_perturbation();
  const perturb::SeveritySchedule* schedule = nullptr;  // nullptr: built-in
  bool salvage = false;  // keep successes instead of throwing on failures
  unsigned threads = 0;  // 0: hardware concurrency
  ImageLoader loader;    // empty: perturb::load_image(record.path)
  std::map<std::string, std::string> extra;  // copied into the store header
};

struct ExtractionFailure {
  std::string id;
  std::string message;
};

struct ExtractResult {
  EmbeddingStore store;
  std::vector<ExtractionFailure> failures;  // in manifest order
  std::size_t attempted = 0;

  double failure_fraction() const {
    return attempted == 0 ? 0.0 : static_cast<double>(failures.size()) / static_cast<double>(attempted);
  }
};

StoreHeader make_header(const ModelSpec& model, const perturb::PerturbationSpec& perturbation,
                        const perturb::SeveritySchedule& schedule);

// Two records per image: original = preprocess(load(x)) and
// perturbed = preprocess(apply(load(x))). Records come out in manifest order
// whatever the thread count. Without salvage the first failure is rethrown
// with its id (kExtraction); with salvage failures are listed instead.
ExtractResult extract_dataset(const corpus::Manifest& manifest, const LayerEmbedder& model,
                              const ExtractOptions& options = {});

// Throws kBudgetExceeded when failures exceed `max_fraction` of attempts.
void enforce_failure_budget(const ExtractResult& result, double max_fraction);

std::string failure_report_csv(const std::vector<ExtractionFailure>& failures);

// Embeds each image once unperturbed, then reuses those originals for every
// requested perturbation (the joint search over kinds and severities).
class PairExtractor {
 public:
  // Decoding failures surface in every extract() result for that image.
  PairExtractor(const corpus::Manifest& images, const LayerEmbedder& model, ExtractOptions options = {});

  ExtractResult extract(const perturb::PerturbationSpec& perturbation) const;

 private:
  struct Entry {
    const corpus::ImageRecord* record = nullptr;
    std::optional<perturb::Image> image;
    std::optional<LayerMatrix> original;
    std::string error;
  };

  const corpus::Manifest& images_;
  const LayerEmbedder& model_;
  ExtractOptions options_;
  std::vector<Entry> entries_;
};

}  // namespace layerwise::backend

#endif  // LAYERWISE_BACKEND_EXTRACT_HPP_
