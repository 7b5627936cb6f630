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

#include "layerwise/backend/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "layerwise/common.hpp"

namespace layerwise::backend {
namespace {

struct Tap {
  int lo;
  int hi;
  double t;
};

std::vector<Tap> axis_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

std::vector<double> resize_bilinear(const perturb::Image& image, int out_height, int out_width) {
  if (image.empty() || image.height() <= 0 || image.width() <= 0) {
    fail(ErrorCode::kInvalidArgument, "cannot resize a degenerate image");
  }
  if (out_height <= 0 || out_width <= 0) fail(ErrorCode::kInvalidArgument, "resize target must be positive");
  std::vector<double> out(static_cast<std::size_t>(out_height) * out_width * 3);
  if (out_height == image.height() && out_width == image.width()) {
    const auto src = image.data();
    std::copy(src.begin(), src.end(), out.begin());
    return out;
  }
  const auto ys = axis_taps(image.height(), out_height);
  const auto xs = axis_taps(image.width(), out_width);
  std::size_t k = 0;
  for (const Tap& ty : ys) {
    for (const Tap& tx : xs) {
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - tx.t) * image.at(ty.lo, tx.lo, c) + tx.t * image.at(ty.lo, tx.hi, c);
        const double bot = (1.0 - tx.t) * image.at(ty.hi, tx.lo, c) + tx.t * image.at(ty.hi, tx.hi, c);
        out[k++] = (1.0 - ty.t) * top + ty.t * bot;
      }
    }
  }
  return out;
}

ModelInput preprocess(const perturb::Image& image, const ModelSpec& spec) {
  if (image.empty()) fail(ErrorCode::kInvalidArgument, "cannot preprocess an empty image");
  const int s = spec.input_size;
  const auto resized = resize_bilinear(image, s, s);
  ModelInput input;
  input.size = s;
  input.chw.resize(static_cast<std::size_t>(3) * s * s);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = resized[(static_cast<std::size_t>(y) * s + x) * 3 + c];
        input.chw[(static_cast<std::size_t>(c) * s + y) * s + x] =
            static_cast<float>((v - spec.mean[static_cast<std::size_t>(c)]) / spec.std[static_cast<std::size_t>(c)]);
      }
    }
  }
  return input;
}

}  // namespace layerwise::backend
