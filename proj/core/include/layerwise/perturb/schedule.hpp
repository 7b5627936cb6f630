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

#ifndef LAYERWISE_PERTURB_SCHEDULE_HPP_
#define LAYERWISE_PERTURB_SCHEDULE_HPP_

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

namespace layerwise::perturb {

inline constexpr int kSeverityLevels = 8;

template <typename T>
using PerLevel = std::array<T, kSeverityLevels>;

struct DefocusParams {
  double radius = 0.0;      // disk radius in pixels
  double alias_blur = 0.0;  // Gaussian sigma smoothing the disk edge
};

struct ZoomParams {
  double max_factor = 1.0;  // largest zoom factor
  double step = 0.01;       // factors 1, 1 + step, ... <= max_factor
};

struct ElasticParams {
  double alpha = 0.0;  // displacement amplitude in pixels
  double sigma = 1.0;  // smoothing of the displacement field in pixels
};

// Parameter tables for severities 1..8 of every corruption. Loaded from a
// versioned `key = v1 ... v8` text file; the built-in table is the shipped
// data/severity_schedule.txt.
struct SeveritySchedule {
  std::string version;
  PerLevel<double> contrast_factor{};
  PerLevel<ElasticParams> elastic{};
  PerLevel<int> jpeg_quality{};
  PerLevel<double> impulse_amount{};
  PerLevel<double> gaussian_sigma{};
  PerLevel<DefocusParams> defocus{};
  PerLevel<double> shot_photons{};
  PerLevel<ZoomParams> zoom{};

  static const SeveritySchedule& builtin();
  static SeveritySchedule parse(std::string_view text);
  static SeveritySchedule load(const std::filesystem::path& path);

  std::string to_text() const;

  // Ranges plus monotonicity of every magnitude parameter in severity.
  // Throws kInvalidArgument naming the offending key.
  void validate() const;
};

// Text of the shipped schedule file.
std::string_view builtin_schedule_text();

}  // namespace layerwise::perturb

#endif  // LAYERWISE_PERTURB_SCHEDULE_HPP_
