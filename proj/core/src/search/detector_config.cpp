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

#include "layerwise/search/detector_config.hpp"

#include "json.hpp"

namespace layerwise::search {

void DetectorConfig::validate() const {
  if (model_name.empty()) fail(ErrorCode::kInvalidArgument, "detector config: model name is empty");
  if (num_layers < 1 || hidden_dim < 1) fail(ErrorCode::kInvalidArgument, "detector config: num_layers and hidden_dim must be >= 1");
  if (optimal_layer < 1 || optimal_layer > num_layers) {
    fail(ErrorCode::kInvalidArgument, "detector config: optimal_layer " + std::to_string(optimal_layer) +
                                          " outside 1.." + std::to_string(num_layers));
  }
  if (!(threshold.tau >= -1.0 && threshold.tau <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "detector config: tau must lie in [-1, 1]");
  }
  perturbation.validate();
}

std::string DetectorConfig::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = {{"name", model_name}, {"num_layers", num_layers}, {"hidden_dim", hidden_dim}};
  j["perturbation"] = {{"kind", std::string(perturb::to_string(perturbation.kind))},
                       {"severity", perturbation.severity},
                       {"seed", perturbation.seed}};
  j["optimal_layer"] = optimal_layer;
  j["threshold"] = {{"tau", threshold.tau}, {"policy", threshold.policy}, {"tpr", threshold.tpr}, {"fpr", threshold.fpr}};
  const Provenance& p = provenance;
  j["provenance"] = {{"subset_seed", p.subset_seed},
                     {"fraction_percent", p.fraction_percent},
                     {"reference_size", p.reference_size},
                     {"subset_size", p.subset_size},
                     {"balanced", p.balanced},
                     {"subset_source", p.subset_source},
                     {"schedule_version", p.schedule_version},
                     {"search_space", p.search_space},
                     {"search_auroc", p.search_auroc},
                     {"search_ap", p.search_ap},
                     {"config_digest", p.config_digest},
                     {"toolkit_version", p.toolkit_version}};
  return j.dump(2) + "\n";
}

DetectorConfig DetectorConfig::from_json(std::string_view text) {
  DetectorConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& m = j.at("model");
    c.model_name = m.at("name").get<std::string>();
    c.num_layers = m.at("num_layers").get<int>();
    c.hidden_dim = m.at("hidden_dim").get<int>();
    const auto& pert = j.at("perturbation");
    c.perturbation.kind = perturb::parse_kind(pert.at("kind").get<std::string>());
    c.perturbation.severity = pert.at("severity").get<int>();
    c.perturbation.seed = pert.at("seed").get<std::uint64_t>();
    c.optimal_layer = j.at("optimal_layer").get<int>();
    const auto& t = j.at("threshold");
    c.threshold.tau = t.at("tau").get<double>();
    c.threshold.policy = t.at("policy").get<std::string>();
    c.threshold.tpr = t.at("tpr").get<double>();
    c.threshold.fpr = t.at("fpr").get<double>();
    const auto& p = j.at("provenance");
    Provenance& out = c.provenance;
    out.subset_seed = p.at("subset_seed").get<std::uint64_t>();
    out.fraction_percent = p.at("fraction_percent").get<double>();
    out.reference_size = p.at("reference_size").get<std::size_t>();
    out.subset_size = p.at("subset_size").get<std::size_t>();
    out.balanced = p.at("balanced").get<bool>();
    out.subset_source = p.at("subset_source").get<std::string>();
    out.schedule_version = p.at("schedule_version").get<std::string>();
    out.search_space = p.at("search_space").get<std::string>();
    out.search_auroc = p.at("search_auroc").get<double>();
    out.search_ap = p.at("search_ap").get<double>();
    out.config_digest = p.at("config_digest").get<std::string>();
    out.toolkit_version = p.at("toolkit_version").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("detector config: ") + e.what());
  }
  c.validate();
  return c;
}

void DetectorConfig::check_compatible(const backend::ModelSpec& model, std::string_view schedule_version) const {
  if (model.name != model_name) {
    fail(ErrorCode::kInvalidArgument, "detector config was built for model '" + model_name + "', loaded model is '" +
                                          model.name + "'");
  }
  if (model.num_layers != num_layers || model.hidden_dim != hidden_dim) {
    fail(ErrorCode::kInvalidArgument, "detector config shape " + std::to_string(num_layers) + "x" +
                                          std::to_string(hidden_dim) + " does not match model " +
                                          std::to_string(model.num_layers) + "x" + std::to_string(model.hidden_dim));
  }
  if (schedule_version != provenance.schedule_version) {
    fail(ErrorCode::kInvalidArgument, "detector config uses severity schedule '" + provenance.schedule_version +
                                          "', loaded schedule is '" + std::string(schedule_version) + "'");
  }
}

DetectorConfig load_detector_config(const std::filesystem::path& path) { return DetectorConfig::from_json(read_file(path)); }

void save_detector_config(const DetectorConfig& config, const std::filesystem::path& path) {
  config.validate();
  write_file(path, config.to_json());
}

}  // namespace layerwise::search
