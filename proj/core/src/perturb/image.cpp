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

#include "layerwise/perturb/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "layerwise/common.hpp"

namespace layerwise::perturb {
namespace {

std::size_t checked_size(int height, int width) {
  if (height <= 0 || width <= 0) {
    fail(ErrorCode::kInvalidArgument, "image dimensions must be positive, got " +
                                          std::to_string(height) + "x" + std::to_string(width));
  }
  return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * Image::kChannels;
}

float clamp_unit(double v) {
  if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "non-finite pixel value");
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

}  // namespace

Image::Image(int height, int width, float fill)
    : height_(height), width_(width), data_(checked_size(height, width), clamp_unit(fill)) {}

Image::Image(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != checked_size(height, width)) {
    fail(ErrorCode::kInvalidArgument, "image buffer has " + std::to_string(data_.size()) +
                                          " values, expected " +
                                          std::to_string(checked_size(height, width)));
  }
  for (float& v : data_) v = clamp_unit(v);
}

Image::Image(int height, int width, const std::vector<double>& data)
    : height_(height), width_(width) {
  if (data.size() != checked_size(height, width)) {
    fail(ErrorCode::kInvalidArgument, "image buffer has " + std::to_string(data.size()) +
                                          " values, expected " +
                                          std::to_string(checked_size(height, width)));
  }
  data_.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) data_[i] = clamp_unit(data[i]);
}

void Image::set(int y, int x, int c, float value) { data_[index(y, x, c)] = clamp_unit(value); }

}  // namespace layerwise::perturb
