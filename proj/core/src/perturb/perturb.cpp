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

#include "layerwise/perturb/perturb.hpp"

#include <cmath>

#include "layerwise/common.hpp"
#include "layerwise/perturb/image_io.hpp"
#include "layerwise/perturb/kernels.hpp"
#include "layerwise/rng.hpp"

namespace layerwise::perturb {
namespace {

struct KindName {
  PerturbationKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 8> kKindNames = {{
    {PerturbationKind::kContrast, "contrast"},
    {PerturbationKind::kElasticTransform, "elastic_transform"},
    {PerturbationKind::kJpegCompression, "jpeg_compression"},
    {PerturbationKind::kImpulseNoise, "impulse_noise"},
    {PerturbationKind::kGaussianNoise, "gaussian_noise"},
    {PerturbationKind::kDefocusBlur, "defocus_blur"},
    {PerturbationKind::kShotNoise, "shot_noise"},
    {PerturbationKind::kZoomBlur, "zoom_blur"},
}};

std::size_t level(int severity) { return static_cast<std::size_t>(severity - 1); }

std::uint64_t poisson_inverse(double mean, double u) {
  if (mean <= 0.0) return 0;
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  const double limit = mean + 40.0 * std::sqrt(mean) + 100.0;
  while (u > cdf && static_cast<double>(k) < limit) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

}  // namespace

std::string_view to_string(PerturbationKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

PerturbationKind parse_kind(std::string_view name) {
  const std::string lower = to_lower(trim(name));
  for (const auto& kn : kKindNames) {
    if (kn.name == lower) return kn.kind;
  }
  std::string known;
  for (const auto& kn : kKindNames) known += (known.empty() ? "" : ", ") + std::string(kn.name);
  fail(ErrorCode::kInvalidArgument, "unknown perturbation kind '" + std::string(name) + "' (expected one of " + known + ")");
}

bool is_stochastic(PerturbationKind kind) {
  return kind == PerturbationKind::kGaussianNoise || kind == PerturbationKind::kShotNoise ||
         kind == PerturbationKind::kImpulseNoise || kind == PerturbationKind::kElasticTransform;
}

void PerturbationSpec::validate() const {
  if (severity < 1 || severity > kSeverityLevels) {
    fail(ErrorCode::kInvalidArgument, "severity must be in [1, 8], got " + std::to_string(severity));
  }
  if (to_string(kind) == "unknown") fail(ErrorCode::kInvalidArgument, "unsupported perturbation kind");
}

std::string PerturbationSpec::describe() const {
  std::string out = std::string(to_string(kind)) + "@" + std::to_string(severity);
  if (is_stochastic(kind)) out += "#" + std::to_string(seed);
  return out;
}

PerturbationSpec default_perturbation() { return {PerturbationKind::kDefocusBlur, 7, 0}; }

Image apply(const Image& image, const PerturbationSpec& spec, const SeveritySchedule& schedule) {
  spec.validate();
  if (image.empty()) fail(ErrorCode::kInvalidArgument, "cannot perturb an empty image");
  const std::size_t s = level(spec.severity);
  switch (spec.kind) {
    case PerturbationKind::kContrast:
      return contrast(image, schedule.contrast_factor[s]);
    case PerturbationKind::kElasticTransform:
      return elastic_transform(image, schedule.elastic[s], spec.seed);
    case PerturbationKind::kJpegCompression:
      return jpeg_compression(image, schedule.jpeg_quality[s]);
    case PerturbationKind::kImpulseNoise:
      return impulse_noise(image, schedule.impulse_amount[s], spec.seed);
    case PerturbationKind::kGaussianNoise:
      return gaussian_noise(image, schedule.gaussian_sigma[s], spec.seed);
    case PerturbationKind::kDefocusBlur:
      return defocus_blur(image, schedule.defocus[s]);
    case PerturbationKind::kShotNoise:
      return shot_noise(image, schedule.shot_photons[s], spec.seed);
    case PerturbationKind::kZoomBlur: {
      const auto factors = zoom_factors(schedule.zoom[s]);
      return zoom_blur(image, factors);
    }
  }
  fail(ErrorCode::kInvalidArgument, "unsupported perturbation kind");
}

Image contrast(const Image& image, double factor) {
  if (factor == 1.0) return image;
  const auto src = image.data();
  const std::size_t pixels = src.size() / 3;
  std::array<double, 3> mean{};
  for (int c = 0; c < 3; ++c) {
    KahanSum sum;
    for (std::size_t p = 0; p < pixels; ++p) sum.add(src[p * 3 + static_cast<std::size_t>(c)]);
    mean[static_cast<std::size_t>(c)] = sum.value() / static_cast<double>(pixels);
  }
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double m = mean[i % 3];
    out[i] = m + factor * (static_cast<double>(src[i]) - m);
  }
  return Image(image.height(), image.width(), out);
}

DisplacementField elastic_displacement(int height, int width, const ElasticParams& params,
                                       std::uint64_t seed) {
  DisplacementField field;
  field.height = height;
  field.width = width;
  const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  field.dy.assign(n, 0.0);
  field.dx.assign(n, 0.0);
  if (params.alpha == 0.0) return field;
  const CounterRng ry(seed, RngStream::kElasticY);
  const CounterRng rx(seed, RngStream::kElasticX);
  for (std::size_t i = 0; i < n; ++i) {
    field.dy[i] = 2.0 * ry.uniform(i) - 1.0;
    field.dx[i] = 2.0 * rx.uniform(i) - 1.0;
  }
  const Kernel1D g = gaussian_kernel(params.sigma);
  field.dy = convolve_separable(field.dy, height, width, g);
  field.dx = convolve_separable(field.dx, height, width, g);
  for (std::size_t i = 0; i < n; ++i) {
    field.dy[i] *= params.alpha;
    field.dx[i] *= params.alpha;
  }
  return field;
}

Image elastic_transform(const Image& image, const ElasticParams& params, std::uint64_t seed) {
  if (params.alpha == 0.0) return image;
  const DisplacementField field = elastic_displacement(image.height(), image.width(), params, seed);
  std::vector<double> out(image.size());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width()) +
                            static_cast<std::size_t>(x);
      const double sy = y + field.dy[p];
      const double sx = x + field.dx[p];
      for (int c = 0; c < 3; ++c) out[image.index(y, x, c)] = sample_bilinear(image, sy, sx, c);
    }
  }
  return Image(image.height(), image.width(), out);
}

Image jpeg_compression(const Image& image, int quality) { return jpeg_roundtrip(image, quality); }

Image impulse_noise(const Image& image, double amount, std::uint64_t seed) {
  const CounterRng rng(seed, RngStream::kImpulseNoise);
  const auto src = image.data();
  std::vector<float> out(src.begin(), src.end());
  const std::size_t pixels = src.size() / 3;
  for (std::size_t p = 0; p < pixels; ++p) {
    const auto [hit, salt] = rng.uniform_pair(p);
    if (hit < amount) {
      const float v = salt < 0.5 ? 0.0f : 1.0f;
      out[p * 3] = v;
      out[p * 3 + 1] = v;
      out[p * 3 + 2] = v;
    }
  }
  return Image(image.height(), image.width(), std::move(out));
}

Image gaussian_noise(const Image& image, double sigma, std::uint64_t seed) {
  const CounterRng rng(seed, RngStream::kGaussianNoise);
  const auto src = image.data();
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i] + sigma * rng.normal(i);
  return Image(image.height(), image.width(), out);
}

Image defocus_blur(const Image& image, const DefocusParams& params) {
  return convolve(image, defocus_kernel(params.radius, params.alias_blur));
}

Image shot_noise(const Image& image, double photons, std::uint64_t seed) {
  if (!(photons > 0.0)) fail(ErrorCode::kInvalidArgument, "shot noise photon count must be > 0");
  const CounterRng rng(seed, RngStream::kShotNoise);
  const auto src = image.data();
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const std::uint64_t k = poisson_inverse(static_cast<double>(src[i]) * photons, rng.uniform(i));
    out[i] = static_cast<double>(k) / photons;
  }
  return Image(image.height(), image.width(), out);
}

std::vector<double> zoom_factors(const ZoomParams& params) {
  std::vector<double> factors;
  for (int k = 0;; ++k) {
    const double z = 1.0 + k * params.step;
    if (z > params.max_factor + 1e-9) break;
    factors.push_back(z);
  }
  return factors;
}

Image zoom_blur(const Image& image, std::span<const double> factors) {
  if (factors.empty()) fail(ErrorCode::kInvalidArgument, "zoom blur needs at least one factor");
  if (factors.size() == 1 && factors[0] == 1.0) return image;
  const int h = image.height();
  const int w = image.width();
  const double cy = (h - 1) / 2.0;
  const double cx = (w - 1) / 2.0;
  std::vector<double> acc(image.size(), 0.0);
  const auto src = image.data();
  for (double z : factors) {
    if (!(z >= 1.0)) fail(ErrorCode::kInvalidArgument, "zoom factors must be >= 1");
    if (z == 1.0) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
      continue;
    }
    for (int y = 0; y < h; ++y) {
      const double sy = cy + (y - cy) / z;
      for (int x = 0; x < w; ++x) {
        const double sx = cx + (x - cx) / z;
        for (int c = 0; c < 3; ++c) acc[image.index(y, x, c)] += sample_bilinear(image, sy, sx, c);
      }
    }
  }
  const double n = static_cast<double>(factors.size());
  for (double& v : acc) v /= n;
  return Image(h, w, acc);
}

}  // namespace layerwise::perturb
