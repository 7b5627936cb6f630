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

#ifndef LAYERWISE_BACKEND_ONNX_OPS_HPP_
#define LAYERWISE_BACKEND_ONNX_OPS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "layerwise/backend/tensor.hpp"

namespace layerwise::backend::onnx_detail {

struct Attribute {
  enum class Kind { kFloat, kInt, kString, kTensor, kFloats, kInts, kStrings, kOther };
  Kind kind = Kind::kOther;
  float f = 0.0f;
  std::int64_t i = 0;
  std::string s;
  Tensor t;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;
  std::vector<std::string> strings;
};

struct Node {
  std::string name;
  std::string op_type;
  std::string domain;
  std::vector<std::string> inputs;   // "" marks an omitted optional input
  std::vector<std::string> outputs;
  std::unordered_map<std::string, Attribute> attributes;

  const Attribute* attr(const std::string& key) const;
  std::int64_t attr_int(const std::string& key, std::int64_t fallback) const;
  float attr_float(const std::string& key, float fallback) const;
  std::string attr_string(const std::string& key, const std::string& fallback) const;
  std::optional<std::vector<std::int64_t>> attr_ints(const std::string& key) const;
};

struct OpContext {
  const Node& node;
  std::int64_t opset;
};

// nullptr entries are omitted optional inputs.
using Inputs = std::vector<const Tensor*>;
using OpFn = std::vector<Tensor> (*)(const OpContext&, const Inputs&);

const OpFn* find_op(std::string_view op_type);
std::vector<std::string> supported_ops();

}  // namespace layerwise::backend::onnx_detail

#endif  // LAYERWISE_BACKEND_ONNX_OPS_HPP_
