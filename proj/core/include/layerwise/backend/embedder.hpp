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

#ifndef LAYERWISE_BACKEND_EMBEDDER_HPP_
#define LAYERWISE_BACKEND_EMBEDDER_HPP_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "layerwise/backend/model_spec.hpp"
#include "layerwise/backend/onnx_graph.hpp"
#include "layerwise/backend/preprocess.hpp"
#include "layerwise/perturb/image.hpp"

namespace layerwise::backend {

// L x d class-token embeddings of one image, row-major; row k is layer k + 1.
struct LayerMatrix {
  int layers = 0;
  int dim = 0;
  std::vector<float> values;

  LayerMatrix() = default;
  LayerMatrix(int num_layers, int hidden_dim)
      : layers(num_layers), dim(hidden_dim),
        values(static_cast<std::size_t>(num_layers) * static_cast<std::size_t>(hidden_dim), 0.0f) {}

  std::span<const float> row(int index) const {
    return {values.data() + static_cast<std::size_t>(index) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  std::span<float> row(int index) {
    return {values.data() + static_cast<std::size_t>(index) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }

  friend bool operator==(const LayerMatrix&, const LayerMatrix&) = default;
};

// Throws kExtraction when the matrix has the wrong shape, a non-finite value,
// or an all-zero row.
void validate_embeddings(const LayerMatrix& m, int layers, int dim);

// Anything that maps a decoded image to its per-layer embeddings. Must be
// safe to call concurrently.
class LayerEmbedder {
 public:
  virtual ~LayerEmbedder() = default;
  virtual const ModelSpec& spec() const = 0;
  virtual LayerMatrix embed(const perturb::Image& image) const = 0;
};

class OnnxEmbedder final : public LayerEmbedder {
 public:
  // Package directory (model.json + graph) or the sidecar JSON itself.
  static std::unique_ptr<OnnxEmbedder> load(const std::filesystem::path& package);

  // Checks every tap and the input name against the graph.
  OnnxEmbedder(ModelSpec spec, OnnxGraph graph);

  const ModelSpec& spec() const override { return spec_; }
  const OnnxGraph& graph() const { return graph_; }

  // preprocess + one forward pass fetching all L taps.
  LayerMatrix embed(const perturb::Image& image) const override;
  LayerMatrix embed_input(const ModelInput& input, RunStats* stats = nullptr) const;

  // Single tap; `layer` is 1-based. Used to check single-pass equivalence.
  std::vector<float> embed_layer(const ModelInput& input, int layer, RunStats* stats = nullptr) const;

 private:
  Tensor to_tensor(const ModelInput& input) const;
  std::vector<float> class_token(const Tensor& tap, int layer) const;

  ModelSpec spec_;
  OnnxGraph graph_;
  std::string input_name_;
};

// Preprocesses and runs all taps in one pass.
LayerMatrix extract_all_layers(const perturb::Image& image, const LayerEmbedder& model);

}  // namespace layerwise::backend

#endif  // LAYERWISE_BACKEND_EMBEDDER_HPP_
