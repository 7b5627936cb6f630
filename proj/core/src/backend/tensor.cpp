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

#include "layerwise/backend/tensor.hpp"

#include "layerwise/common.hpp"

namespace layerwise::backend {

std::string to_string(DType dtype) {
  switch (dtype) {
    case DType::kFloat:
      return "float";
    case DType::kInt64:
      return "int64";
    case DType::kBool:
      return "bool";
  }
  return "unknown";
}

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) fail(ErrorCode::kInvalidArgument, "negative dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(shape[k]);
  }
  return out + "]";
}

namespace {

void check_count(const Shape& shape, std::size_t count) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  if (n != static_cast<std::int64_t>(count)) {
    fail(ErrorCode::kInvalidArgument, "tensor of shape " + shape_string(shape) + " given " +
                                          std::to_string(count) + " values");
  }
}

}  // namespace

Tensor Tensor::floats(Shape shape, std::vector<float> values) {
  check_count(shape, values.size());
  Tensor t;
  t.dtype = DType::kFloat;
  t.shape = std::move(shape);
  t.f = std::move(values);
  return t;
}

Tensor Tensor::ints(Shape shape, std::vector<std::int64_t> values) {
  check_count(shape, values.size());
  Tensor t;
  t.dtype = DType::kInt64;
  t.shape = std::move(shape);
  t.i = std::move(values);
  return t;
}

Tensor Tensor::bools(Shape shape, std::vector<std::int64_t> values) {
  Tensor t = ints(std::move(shape), std::move(values));
  t.dtype = DType::kBool;
  for (auto& v : t.i) v = v != 0;
  return t;
}

std::int64_t Tensor::int_at(std::int64_t index) const {
  const auto k = static_cast<std::size_t>(index);
  return is_float() ? static_cast<std::int64_t>(f[k]) : i[k];
}

double Tensor::double_at(std::int64_t index) const {
  const auto k = static_cast<std::size_t>(index);
  return is_float() ? static_cast<double>(f[k]) : static_cast<double>(i[k]);
}

std::vector<std::int64_t> Tensor::to_ints() const {
  std::vector<std::int64_t> out(static_cast<std::size_t>(size()));
  for (std::int64_t k = 0; k < size(); ++k) out[static_cast<std::size_t>(k)] = int_at(k);
  return out;
}

}  // namespace layerwise::backend
