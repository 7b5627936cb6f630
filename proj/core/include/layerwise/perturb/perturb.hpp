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

#ifndef LAYERWISE_PERTURB_PERTURB_HPP_
#define LAYERWISE_PERTURB_PERTURB_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layerwise/perturb/image.hpp"
#include "layerwise/perturb/schedule.hpp"

namespace layerwise::perturb {

// Declaration order is the canonical kind order (search tie-breaks use it).
enum class PerturbationKind {
  kContrast,
  kElasticTransform,
  kJpegCompression,
  kImpulseNoise,
  kGaussianNoise,
  kDefocusBlur,
  kShotNoise,
  kZoomBlur,
};

inline constexpr std::array<PerturbationKind, 8> kAllKinds = {
    PerturbationKind::kContrast,      PerturbationKind::kElasticTransform,
    PerturbationKind::kJpegCompression, PerturbationKind::kImpulseNoise,
    PerturbationKind::kGaussianNoise, PerturbationKind::kDefocusBlur,
    PerturbationKind::kShotNoise,     PerturbationKind::kZoomBlur,
};

std::string_view to_string(PerturbationKind kind);
PerturbationKind parse_kind(std::string_view name);
bool is_stochastic(PerturbationKind kind);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kDefocusBlur;
  int severity = 7;
  std::uint64_t seed = 0;  // read only by stochastic kinds

  void validate() const;
  std::string describe() const;

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

// Defocus blur at severity 7.
PerturbationSpec default_perturbation();

// Output has the input's dimensions and values in [0, 1]; (image, spec)
// determines it bit-exactly.
Image apply(const Image& image, const PerturbationSpec& spec,
            const SeveritySchedule& schedule = SeveritySchedule::builtin());

// Parameterized corruptions behind apply().

// mean_c + factor * (x - mean_c) per channel; factor 1 is the identity.
Image contrast(const Image& image, double factor);

struct DisplacementField {
  int height = 0;
  int width = 0;
  std::vector<double> dy;
  std::vector<double> dx;
};

// alpha * (Gaussian_sigma * U(-1, 1)) per axis.
DisplacementField elastic_displacement(int height, int width, const ElasticParams& params,
                                       std::uint64_t seed);
Image elastic_transform(const Image& image, const ElasticParams& params, std::uint64_t seed);

Image jpeg_compression(const Image& image, int quality);

// Each pixel is replaced with probability `amount` by black or white with
// equal probability (all three channels together).
Image impulse_noise(const Image& image, double amount, std::uint64_t seed);

Image gaussian_noise(const Image& image, double sigma, std::uint64_t seed);

Image defocus_blur(const Image& image, const DefocusParams& params);

// Poisson(x * photons) / photons per value.
Image shot_noise(const Image& image, double photons, std::uint64_t seed);

std::vector<double> zoom_factors(const ZoomParams& params);
// Mean of center-zoomed copies, one per factor, bilinearly resampled.
Image zoom_blur(const Image& image, std::span<const double> factors);

}  // namespace layerwise::perturb

#endif  // LAYERWISE_PERTURB_PERTURB_HPP_
