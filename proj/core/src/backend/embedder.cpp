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

#include "layerwise/backend/embedder.hpp"

#include <algorithm>
#include <cmath>

#include "layerwise/common.hpp"

namespace layerwise::backend {

void validate_embeddings(const LayerMatrix& m, int layers, int dim) {
  if (m.layers != layers || m.dim != dim ||
      m.values.size() != static_cast<std::size_t>(layers) * static_cast<std::size_t>(dim)) {
    fail(ErrorCode::kExtraction, "embedding matrix is " + std::to_string(m.layers) + "x" + std::to_string(m.dim) +
                                     ", expected " + std::to_string(layers) + "x" + std::to_string(dim));
  }
  for (int l = 0; l < layers; ++l) {
    bool nonzero = false;
    for (float v : m.row(l)) {
      if (!std::isfinite(v)) fail(ErrorCode::kExtraction, "non-finite activation at layer " + std::to_string(l + 1));
      nonzero = nonzero || v != 0.0f;
    }
    if (!nonzero) fail(ErrorCode::kExtraction, "zero-norm embedding at layer " + std::to_string(l + 1));
  }
}

std::unique_ptr<OnnxEmbedder> OnnxEmbedder::load(const std::filesystem::path& package) {
  ModelSpec spec = load_model_spec(package);
  OnnxGraph graph = OnnxGraph::load(spec.graph_path);
  return std::make_unique<OnnxEmbedder>(std::move(spec), std::move(graph));
}

OnnxEmbedder::OnnxEmbedder(ModelSpec spec, OnnxGraph graph) : spec_(std::move(spec)), graph_(std::move(graph)) {
  spec_.validate();
  for (const auto& tap : spec_.tap_names) {
    if (!graph_.has_value(tap)) fail(ErrorCode::kNotFound, "tap name missing from graph: " + tap);
  }
  graph_.check_supported(spec_.tap_names);
  const auto inputs = graph_.input_names();
  if (spec_.input_name.empty()) {
    if (inputs.size() != 1) {
      fail(ErrorCode::kInvalidArgument, "graph has " + std::to_string(inputs.size()) +
                                            " inputs; the model spec must name one with input_name");
    }
    input_name_ = inputs.front();
  } else {
    if (std::find(inputs.begin(), inputs.end(), spec_.input_name) == inputs.end()) {
      fail(ErrorCode::kNotFound, "input missing from graph: " + spec_.input_name);
    }
    input_name_ = spec_.input_name;
  }
}

Tensor OnnxEmbedder::to_tensor(const ModelInput& input) const {
  if (input.size != spec_.input_size) {
    fail(ErrorCode::kInvalidArgument, "model input is " + std::to_string(input.size) + " pixels, expected " +
                                          std::to_string(spec_.input_size));
  }
  return Tensor::floats({1, 3, input.size, input.size}, input.chw);
}

// A tap is either exactly d values or a token sequence [..., T, d] whose
// first token is the class token.
std::vector<float> OnnxEmbedder::class_token(const Tensor& tap, int layer) const {
  const auto d = static_cast<std::int64_t>(spec_.hidden_dim);
  if (!tap.is_float()) fail(ErrorCode::kExtraction, "tap for layer " + std::to_string(layer) + " is not floating point");
  if (tap.size() == d) return tap.f;
  if (tap.rank() >= 2 && tap.shape.back() == d) {
    bool leading_ones = true;
    for (std::size_t k = 0; k + 2 < tap.shape.size(); ++k) leading_ones = leading_ones && tap.shape[k] == 1;
    if (leading_ones) return {tap.f.begin(), tap.f.begin() + d};
  }
  fail(ErrorCode::kExtraction, "tap for layer " + std::to_string(layer) + " has shape " + shape_string(tap.shape) +
                                   ", expected " + std::to_string(d) + " values or [1,T," + std::to_string(d) + "]");
}

LayerMatrix OnnxEmbedder::embed_input(const ModelInput& input, RunStats* stats) const {
  TensorMap feeds;
  feeds.emplace(input_name_, to_tensor(input));
  const TensorMap out = graph_.run(feeds, spec_.tap_names, stats);
  LayerMatrix m(spec_.num_layers, spec_.hidden_dim);
  for (int l = 0; l < spec_.num_layers; ++l) {
    const auto token = class_token(out.at(spec_.tap_names[static_cast<std::size_t>(l)]), l + 1);
    std::copy(token.begin(), token.end(), m.row(l).begin());
  }
  validate_embeddings(m, spec_.num_layers, spec_.hidden_dim);
  return m;
}

LayerMatrix OnnxEmbedder::embed(const perturb::Image& image) const { return embed_input(preprocess(image, spec_)); }

std::vector<float> OnnxEmbedder::embed_layer(const ModelInput& input, int layer, RunStats* stats) const {
  if (layer < 1 || layer > spec_.num_layers) fail(ErrorCode::kInvalidArgument, "layer out of range");
  const std::string& tap = spec_.tap_names[static_cast<std::size_t>(layer - 1)];
  TensorMap feeds;
  feeds.emplace(input_name_, to_tensor(input));
  return class_token(graph_.run(feeds, {tap}, stats).at(tap), layer);
}

LayerMatrix extract_all_layers(const perturb::Image& image, const LayerEmbedder& model) {
  LayerMatrix m = model.embed(image);
  validate_embeddings(m, model.spec().num_layers, model.spec().hidden_dim);
  return m;
}

}  // namespace layerwise::backend
