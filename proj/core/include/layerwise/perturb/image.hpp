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

#ifndef LAYERWISE_PERTURB_IMAGE_HPP_
#define LAYERWISE_PERTURB_IMAGE_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace layerwise::perturb {

// H x W x 3 RGB raster, row-major interleaved, every value in [0, 1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, float fill = 0.0f);
  // Values are clamped to [0, 1]; non-finite values are rejected.
  Image(int height, int width, std::vector<float> data);
  Image(int height, int width, const std::vector<double>& data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               kChannels +
           static_cast<std::size_t>(c);
  }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }
  // Clamps to [0, 1].
  void set(int y, int x, int c, float value);

  std::span<const float> data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

}  // namespace layerwise::perturb

#endif  // LAYERWISE_PERTURB_IMAGE_HPP_
