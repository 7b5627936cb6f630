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

// A CPU interpreter for ONNX inference graphs, covering the operator set that
// vision-transformer exports use (convolutional patch embedding, attention,
// layer norm, MLP, shape arithmetic). Any value in the graph can be fetched,
// so intermediate class-token taps come out of one forward pass.

#ifndef LAYERWISE_BACKEND_ONNX_GRAPH_HPP_
#define LAYERWISE_BACKEND_ONNX_GRAPH_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "layerwise/backend/tensor.hpp"

namespace layerwise::backend {

using TensorMap = std::unordered_map<std::string, Tensor>;

struct RunStats {
  std::size_t nodes_executed = 0;
};

class OnnxGraph {
 public:
  // External tensor data is resolved relative to the model file's directory.
  static OnnxGraph load(const std::filesystem::path& path);
  static OnnxGraph from_bytes(std::string_view bytes, const std::filesystem::path& base_dir = {});

  OnnxGraph(OnnxGraph&&) noexcept;
  OnnxGraph& operator=(OnnxGraph&&) noexcept;
  ~OnnxGraph();

  // Graph inputs that are not initializers.
  std::vector<std::string> input_names() const;
  std::vector<std::string> output_names() const;
  // True for graph inputs, initializers and node outputs.
  bool has_value(const std::string& name) const;
  std::size_t node_count() const;
  std::int64_t opset_version() const;

  // Throws kParse naming the first operator without a kernel among the nodes
  // the fetched values depend on; kNotFound for an unknown fetch.
  void check_supported(const std::vector<std::string>& fetches) const;

  // Executes, once each and in graph order, exactly the nodes the fetched
  // values depend on. Read-only on the graph; safe to call concurrently.
  TensorMap run(const TensorMap& feeds, const std::vector<std::string>& fetches,
                RunStats* stats = nullptr) const;

 private:
  struct Impl;
  explicit OnnxGraph(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace layerwise::backend

#endif  // LAYERWISE_BACKEND_ONNX_GRAPH_HPP_
