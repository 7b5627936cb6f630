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

#ifndef LAYERWISE_SEARCH_DETECTOR_CONFIG_HPP_
#define LAYERWISE_SEARCH_DETECTOR_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "layerwise/backend/model_spec.hpp"
#include "layerwise/common.hpp"
#include "layerwise/metrics/metrics.hpp"
#include "layerwise/perturb/perturb.hpp"

namespace layerwise::search {

// How the detector was selected, so a run can be replayed.
struct Provenance {
  std::uint64_t subset_seed = 0;
  double fraction_percent = 0.0;
  std::size_t reference_size = 0;
  std::size_t subset_size = 0;
  bool balanced = true;
  std::string subset_source;
  std::string schedule_version;
  std::string search_space;
  double search_auroc = 0.0;  // AUROC at the chosen cell on the subset
  double search_ap = 0.0;
  std::string config_digest;
  std::string toolkit_version{kToolkitVersion};

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// Output of the layer search: everything detect needs.
struct DetectorConfig {
  std::string model_name;
  int num_layers = 0;
  int hidden_dim = 0;
  perturb::PerturbationSpec perturbation = perturb::default_perturbation();
  int optimal_layer = 1;
  metrics::Threshold threshold;
  Provenance provenance;

  // 1 <= optimal_layer <= num_layers, tau in [-1, 1]. Throws kInvalidArgument.
  void validate() const;
  std::string to_json() const;
  // Throws kParse on malformed JSON or missing fields.
  static DetectorConfig from_json(std::string_view text);

  // Refuses (kInvalidArgument) a model whose name or shape differs, or a
  // severity schedule with another version.
  void check_compatible(const backend::ModelSpec& model, std::string_view schedule_version) const;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

DetectorConfig load_detector_config(const std::filesystem::path& path);
void save_detector_config(const DetectorConfig& config, const std::filesystem::path& path);

}  // namespace layerwise::search

#endif  // LAYERWISE_SEARCH_DETECTOR_CONFIG_HPP_
