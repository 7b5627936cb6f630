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

// Convolution and resampling primitives shared by the blur and warp
// corruptions. Borders use reflect-101 (dcb|abcd|cba) everywhere.

#ifndef LAYERWISE_PERTURB_KERNELS_HPP_
#define LAYERWISE_PERTURB_KERNELS_HPP_

#include <vector>

#include "layerwise/perturb/image.hpp"

namespace layerwise::perturb {

// Square kernel of side 2 * radius + 1, row-major, weights summing to 1.
struct Kernel2D {
  int radius = 0;
  std::vector<double> weights;

  int side() const { return 2 * radius + 1; }
  double at(int dy, int dx) const {
    return weights[static_cast<std::size_t>((dy + radius) * side() + (dx + radius))];
  }
};

struct Kernel1D {
  int radius = 0;
  std::vector<double> weights;
};

// Reflect-101 index into [0, n).
int reflect_index(int i, int n);

// Indicator of x^2 + y^2 <= r^2 on the integer grid [-ceil(r), ceil(r)]^2,
// normalized.
Kernel2D disk_kernel(double radius);

// Sampled Gaussian, radius max(1, ceil(3 sigma)), normalized. sigma <= 0
// yields the unit impulse.
Kernel1D gaussian_kernel(double sigma);

// Full 2-D convolution of a disk with a separable Gaussian: the defocus
// point-spread function.
Kernel2D defocus_kernel(double radius, double alias_sigma);

// Per-channel 2-D convolution with reflect-101 borders, extended
// periodically when the kernel is wider than the image.
Image convolve(const Image& image, const Kernel2D& kernel);

// Separable convolution of one scalar field (h x w) with reflect borders.
std::vector<double> convolve_separable(const std::vector<double>& field, int height, int width,
                                       const Kernel1D& kernel);

// Bilinear sample of channel c at continuous (y, x), pixel centers at
// integers, reflect-101 beyond the border.
double sample_bilinear(const Image& image, double y, double x, int c);

}  // namespace layerwise::perturb

#endif  // LAYERWISE_PERTURB_KERNELS_HPP_
