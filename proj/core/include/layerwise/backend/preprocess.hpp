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

#ifndef LAYERWISE_BACKEND_PREPROCESS_HPP_
#define LAYERWISE_BACKEND_PREPROCESS_HPP_

#include <vector>

#include "layerwise/backend/model_spec.hpp"
#include "layerwise/perturb/image.hpp"

namespace layerwise::backend {

// Normalized network input, planar 3 x size x size (NCHW without N).
struct ModelInput {
  int size = 0;
  std::vector<float> chw;

  float at(int c, int y, int x) const {
    return chw[(static_cast<std::size_t>(c) * size + static_cast<std::size_t>(y)) * size +
               static_cast<std::size_t>(x)];
  }
};

// Bilinear resize with half-pixel centers (source coordinate
// (i + 0.5) * in / out - 0.5, clamped to the edge); interleaved HWC output.
std::vector<double> resize_bilinear(const perturb::Image& image, int out_height, int out_width);

// Resize to input_size x input_size, then (x - mean[c]) / std[c].
ModelInput preprocess(const perturb::Image& image, const ModelSpec& spec);

}  // namespace layerwise::backend

#endif  // LAYERWISE_BACKEND_PREPROCESS_HPP_
