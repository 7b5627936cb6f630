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

#include "layerwise/perturb/kernels.hpp"

#include <cmath>
#include <string>

#include "layerwise/common.hpp"

namespace layerwise::perturb {
namespace {

void normalize(std::vector<double>& weights) {
  KahanSum total;
  for (double w : weights) total.add(w);
  const double sum = total.value();
  for (double& w : weights) w /= sum;
}

// reflect_index for every offset in [-pad, n + pad).
std::vector<int> reflect_table(int n, int pad) {
  std::vector<int> table(static_cast<std::size_t>(n + 2 * pad));
  for (int i = -pad; i < n + pad; ++i) table[static_cast<std::size_t>(i + pad)] = reflect_index(i, n);
  return table;
}

}  // namespace

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

Kernel2D disk_kernel(double radius) {
  if (!(radius > 0.0)) fail(ErrorCode::kInvalidArgument, "disk radius must be > 0");
  Kernel2D k;
  k.radius = static_cast<int>(std::ceil(radius));
  k.weights.assign(static_cast<std::size_t>(k.side() * k.side()), 0.0);
  const double r2 = radius * radius;
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      if (dx * dx + dy * dy <= r2) {
        k.weights[static_cast<std::size_t>((dy + k.radius) * k.side() + dx + k.radius)] = 1.0;
      }
    }
  }
  normalize(k.weights);
  return k;
}

Kernel1D gaussian_kernel(double sigma) {
  Kernel1D k;
  if (!(sigma > 0.0)) {
    k.weights = {1.0};
    return k;
  }
  k.radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  k.weights.resize(static_cast<std::size_t>(2 * k.radius + 1));
  for (int i = -k.radius; i <= k.radius; ++i) {
    k.weights[static_cast<std::size_t>(i + k.radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
  }
  normalize(k.weights);
  return k;
}

Kernel2D defocus_kernel(double radius, double alias_sigma) {
  const Kernel2D disk = disk_kernel(radius);
  const Kernel1D g = gaussian_kernel(alias_sigma);
  Kernel2D out;
  out.radius = disk.radius + g.radius;
  out.weights.assign(static_cast<std::size_t>(out.side() * out.side()), 0.0);
  for (int dy = -disk.radius; dy <= disk.radius; ++dy) {
    for (int dx = -disk.radius; dx <= disk.radius; ++dx) {
      const double w = disk.at(dy, dx);
      if (w == 0.0) continue;
      for (int gy = -g.radius; gy <= g.radius; ++gy) {
        const double wy = w * g.weights[static_cast<std::size_t>(gy + g.radius)];
        for (int gx = -g.radius; gx <= g.radius; ++gx) {
          const int oy = dy + gy + out.radius;
          const int ox = dx + gx + out.radius;
          out.weights[static_cast<std::size_t>(oy * out.side() + ox)] +=
              wy * g.weights[static_cast<std::size_t>(gx + g.radius)];
        }
      }
    }
  }
  normalize(out.weights);
  return out;
}

Image convolve(const Image& image, const Kernel2D& kernel) {
  const int h = image.height();
  const int w = image.width();
  const int r = kernel.radius;
  const auto rows = reflect_table(h, r);
  const auto cols = reflect_table(w, r);
  const auto src = image.data();
  std::vector<double> out(image.size());
  const int side = kernel.side();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int ky = 0; ky < side; ++ky) {
        const int sy = rows[static_cast<std::size_t>(y + ky)];
        const double* krow = &kernel.weights[static_cast<std::size_t>(ky * side)];
        for (int kx = 0; kx < side; ++kx) {
          const double kw = krow[kx];
          if (kw == 0.0) continue;
          const std::size_t base = image.index(sy, cols[static_cast<std::size_t>(x + kx)], 0);
          acc[0] += kw * src[base];
          acc[1] += kw * src[base + 1];
          acc[2] += kw * src[base + 2];
        }
      }
      const std::size_t o = image.index(y, x, 0);
      out[o] = acc[0];
      out[o + 1] = acc[1];
      out[o + 2] = acc[2];
    }
  }
  return Image(h, w, out);
}

std::vector<double> convolve_separable(const std::vector<double>& field, int height, int width,
                                       const Kernel1D& kernel) {
  const int r = kernel.radius;
  const auto rows = reflect_table(height, r);
  const auto cols = reflect_table(width, r);
  std::vector<double> tmp(field.size());
  std::vector<double> out(field.size());
  const auto at = [width](int y, int x) {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = 0; k <= 2 * r; ++k) {
        acc += kernel.weights[static_cast<std::size_t>(k)] * field[at(y, cols[static_cast<std::size_t>(x + k)])];
      }
      tmp[at(y, x)] = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = 0; k <= 2 * r; ++k) {
        acc += kernel.weights[static_cast<std::size_t>(k)] * tmp[at(rows[static_cast<std::size_t>(y + k)], x)];
      }
      out[at(y, x)] = acc;
    }
  }
  return out;
}

double sample_bilinear(const Image& image, double y, double x, int c) {
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const double ty = y - fy;
  const double tx = x - fx;
  const int y0 = static_cast<int>(fy);
  const int x0 = static_cast<int>(fx);
  const int h = image.height();
  const int w = image.width();
  const int ya = reflect_index(y0, h);
  const int yb = reflect_index(y0 + 1, h);
  const int xa = reflect_index(x0, w);
  const int xb = reflect_index(x0 + 1, w);
  const double top = (1.0 - tx) * image.at(ya, xa, c) + tx * image.at(ya, xb, c);
  const double bottom = (1.0 - tx) * image.at(yb, xa, c) + tx * image.at(yb, xb, c);
  return (1.0 - ty) * top + ty * bottom;
}

}  // namespace layerwise::perturb
