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

#ifndef LAYERWISE_BACKEND_TENSOR_HPP_
#define LAYERWISE_BACKEND_TENSOR_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace layerwise::backend {

enum class DType { kFloat, kInt64, kBool };

std::string to_string(DType dtype);

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major tensor used by the graph runner. Floating types are held as
// float32; integer types as int64; booleans as int64 0/1.
struct Tensor {
  DType dtype = DType::kFloat;
  Shape shape;
  std::vector<float> f;
  std::vector<std::int64_t> i;

  static Tensor floats(Shape shape, std::vector<float> values);
  static Tensor ints(Shape shape, std::vector<std::int64_t> values);
  static Tensor bools(Shape shape, std::vector<std::int64_t> values);
  static Tensor scalar(float value) { return floats({}, {value}); }

  std::int64_t size() const { return numel(shape); }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape.size()); }
  bool is_float() const { return dtype == DType::kFloat; }
  // Element as int64 (floats truncated); i-th in row-major order.
  std::int64_t int_at(std::int64_t index) const;
  double double_at(std::int64_t index) const;
  std::vector<std::int64_t> to_ints() const;
};

}  // namespace layerwise::backend

#endif  // LAYERWISE_BACKEND_TENSOR_HPP_
