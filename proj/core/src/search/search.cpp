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

#include "layerwise/search/search.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "layerwise/common.hpp"

namespace layerwise::search {

namespace {

int parse_int(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    fail(ErrorCode::kInvalidArgument, "invalid " + std::string(what) + " '" + t + "'");
  }
  return value;
}

std::string compress_ranges(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j + 1 < values.size() && values[j + 1] == values[j] + 1) ++j;
    if (!out.empty()) out += ",";
    out += std::to_string(values[i]);
    if (j > i) out += "-" + std::to_string(values[j]);
    i = j + 1;
  }
  return out;
}

}  // namespace

LayerSearch search_layer(const score::ScoreMatrix& matrix, std::span<const int> layers) {
  matrix.validate();
  LayerSearch out;
  if (layers.empty()) {
    for (int l = 1; l <= matrix.layers; ++l) out.layers.push_back(l);
  } else {
    out.layers.assign(layers.begin(), layers.end());
    std::sort(out.layers.begin(), out.layers.end());
    out.layers.erase(std::unique(out.layers.begin(), out.layers.end()), out.layers.end());
  }
  if (matrix.count(Label::kReal) == 0 || matrix.count(Label::kGenerated) == 0) {
    fail(ErrorCode::kInvalidArgument, "layer search needs both classes in the score matrix");
  }
  const auto labels = matrix.labels();
  double best = -1.0;
  for (int l : out.layers) {
    if (l < 1 || l > matrix.layers) {
      fail(ErrorCode::kInvalidArgument, "layer " + std::to_string(l) + " outside 1.." + std::to_string(matrix.layers));
    }
    const auto column = matrix.column(l);
    const auto samples = metrics::from_similarities(column, labels);
    const double a = metrics::auroc(samples);
    out.auroc.push_back(a);
    out.ap.push_back(metrics::average_precision(samples));
    if (a > best) {
      best = a;
      out.best_layer = l;
    }
  }
  return out;
}

std::vector<int> parse_index_list(std::string_view text, int lo, int hi) {
  std::set<int> values;
  for (const auto& part : split(text, ',')) {
    const std::string item = trim(part);
    if (item.empty()) continue;
    const auto dash = item.find('-', 1);
    int a = 0, b = 0;
    if (dash == std::string::npos) {
      a = b = parse_int(item, "index");
    } else {
      a = parse_int(std::string_view(item).substr(0, dash), "range start");
      b = parse_int(std::string_view(item).substr(dash + 1), "range end");
    }
    if (a > b) fail(ErrorCode::kInvalidArgument, "descending range '" + item + "'");
    if (a < lo || b > hi) {
      fail(ErrorCode::kInvalidArgument, "'" + item + "' outside " + std::to_string(lo) + ".." + std::to_string(hi));
    }
    for (int v = a; v <= b; ++v) values.insert(v);
  }
  if (values.empty()) fail(ErrorCode::kInvalidArgument, "empty index list '" + std::string(text) + "'");
  return {values.begin(), values.end()};
}

std::vector<perturb::PerturbationKind> parse_kind_list(std::string_view text) {
  if (trim(text) == "all") return {perturb::kAllKinds.begin(), perturb::kAllKinds.end()};
  std::set<perturb::PerturbationKind> kinds;
  for (const auto& part : split(text, ',')) {
    const std::string item = trim(part);
    if (!item.empty()) kinds.insert(perturb::parse_kind(item));
  }
  if (kinds.empty()) fail(ErrorCode::kInvalidArgument, "empty kind list");
  return {kinds.begin(), kinds.end()};
}

void SearchSpace::validate(int num_layers) const {
  if (layers.empty() || kinds.empty() || severities.empty()) {
    fail(ErrorCode::kInvalidArgument, "search space must be non-empty in layers, kinds and severities");
  }
  for (int l : layers) {
    if (l < 1 || l > num_layers) {
      fail(ErrorCode::kInvalidArgument, "search layer " + std::to_string(l) + " outside 1.." + std::to_string(num_layers));
    }
  }
  for (int s : severities) {
    if (s < 1 || s > perturb::kSeverityLevels) {
      fail(ErrorCode::kInvalidArgument, "search severity " + std::to_string(s) + " outside 1..8");
    }
  }
}

SearchSpace SearchSpace::normalized() const {
  SearchSpace out;
  const std::set<int> l(layers.begin(), layers.end()), s(severities.begin(), severities.end());
  const std::set<perturb::PerturbationKind> k(kinds.begin(), kinds.end());
  out.layers.assign(l.begin(), l.end());
  out.severities.assign(s.begin(), s.end());
  out.kinds.assign(k.begin(), k.end());
  return out;
}

std::string SearchSpace::describe() const {
  const SearchSpace n = normalized();
  std::string kinds_text;
  for (auto k : n.kinds) {
    if (!kinds_text.empty()) kinds_text += ",";
    kinds_text += perturb::to_string(k);
  }
  return "layers=" + compress_ranges(n.layers) + ";kinds=" + kinds_text + ";severities=" + compress_ranges(n.severities);
}

SearchSpace SearchSpace::layers_only(int num_layers, const perturb::PerturbationSpec& perturbation) {
  SearchSpace s;
  for (int l = 1; l <= num_layers; ++l) s.layers.push_back(l);
  s.kinds = {perturbation.kind};
  s.severities = {perturbation.severity};
  return s;
}

SearchSpace SearchSpace::full(int num_layers) {
  SearchSpace s;
  for (int l = 1; l <= num_layers; ++l) s.layers.push_back(l);
  s.kinds.assign(perturb::kAllKinds.begin(), perturb::kAllKinds.end());
  for (int v = 1; v <= perturb::kSeverityLevels; ++v) s.severities.push_back(v);
  return s;
}

std::string SearchResult::surface_csv() const {
  std::string out = "kind,severity,layer,auroc,ap\n";
  for (const auto& c : surface) {
    out += std::string(perturb::to_string(c.kind)) + "," + std::to_string(c.severity) + "," + std::to_string(c.layer) +
           "," + format_double(c.auroc) + "," + format_double(c.ap) + "\n";
  }
  return out;
}

SearchResult search_full(const SearchSpace& space, const CellEvaluator& evaluator, std::uint64_t seed,
                         double max_failure_fraction) {
  if (space.layers.empty() || space.kinds.empty() || space.severities.empty()) {
    fail(ErrorCode::kInvalidArgument, "search space must be non-empty in layers, kinds and severities");
  }
  const SearchSpace s = space.normalized();
  SearchResult result;
  bool have_best = false;
  for (auto kind : s.kinds) {
    for (int severity : s.severities) {
      const perturb::PerturbationSpec spec{kind, severity, seed};
      spec.validate();
      CellScores cell = evaluator(spec);
      result.failures += cell.failures;
      result.attempted += cell.attempted;
      if (cell.attempted > 0 &&
          static_cast<double>(cell.failures) > max_failure_fraction * static_cast<double>(cell.attempted)) {
        fail(ErrorCode::kBudgetExceeded, "extraction failures for " + spec.describe() + ": " +
                                             std::to_string(cell.failures) + " of " + std::to_string(cell.attempted) +
                                             " exceed the budget " + format_double(max_failure_fraction));
      }
      s.validate(cell.matrix.layers);
      const LayerSearch ls = search_layer(cell.matrix, s.layers);
      for (std::size_t k = 0; k < ls.layers.size(); ++k) {
        const SurfaceCell c{kind, severity, ls.layers[k], ls.auroc[k], ls.ap[k]};
        result.surface.push_back(c);
        if (!have_best || c.auroc > result.best.auroc) {
          result.best = c;
          have_best = true;
        }
      }
    }
  }
  return result;
}

CellEvaluator extractor_evaluator(const backend::PairExtractor& extractor, unsigned threads) {
  return [&extractor, threads](const perturb::PerturbationSpec& spec) {
    const backend::ExtractResult r = extractor.extract(spec);
    CellScores cell;
    cell.matrix = score::score_store(r.store, threads).matrix;
    cell.failures = r.failures.size();
    cell.attempted = r.attempted;
    return cell;
  };
}

CellEvaluator store_evaluator(std::span<const backend::EmbeddingStore> stores, unsigned threads) {
  return [stores, threads](const perturb::PerturbationSpec& spec) {
    for (const auto& store : stores) {
      const auto& p = store.header.perturbation;
      if (p.kind != spec.kind || p.severity != spec.severity) continue;
      CellScores cell;
      auto scored = score::score_store(store, threads);
      cell.matrix = std::move(scored.matrix);
      // Images lacking a variant count as failed extractions.
      cell.failures = scored.skipped.size();
      cell.attempted = cell.matrix.rows.size() + scored.skipped.size();
      return cell;
    }
    fail(ErrorCode::kNotFound, "no store for search cell " + spec.describe());
  };
}

backend::EmbeddingStore restrict_store(const backend::EmbeddingStore& store, std::span<const std::string> ids) {
  const std::unordered_set<std::string> keep(ids.begin(), ids.end());
  backend::EmbeddingStore out;
  out.header = store.header;
  for (const auto& r : store.records) {
    if (keep.count(r.id)) out.records.push_back(r);
  }
  return out;
}

Detection detect_pair(const std::string& id, const backend::LayerMatrix& original,
                      const backend::LayerMatrix& perturbed, const DetectorConfig& config) {
  const int l = config.optimal_layer;
  if (l < 1 || l > original.layers || l > perturbed.layers) {
    fail(ErrorCode::kInvalidArgument, "optimal layer " + std::to_string(l) + " not present in the embeddings");
  }
  Detection d;
  d.id = id;
  d.similarity = score::cosine_similarity(original.row(l - 1), perturbed.row(l - 1));
  d.label = decide(d.similarity, config.threshold.tau);
  return d;
}

Detection detect_image(const std::string& id, const perturb::Image& image, const DetectorConfig& config,
                       const backend::LayerEmbedder& model, const perturb::SeveritySchedule& schedule) {
  const auto spec = backend::per_image_spec(config.perturbation, id);
  const auto original = backend::extract_all_layers(image, model);
  const auto perturbed = backend::extract_all_layers(perturb::apply(image, spec, schedule), model);
  return detect_pair(id, original, perturbed, config);
}

std::vector<Detection> detect_store(const backend::EmbeddingStore& store, const DetectorConfig& config) {
  std::vector<Detection> out;
  std::vector<std::string> order;
  std::unordered_map<std::string, std::pair<const backend::StoreRecord*, const backend::StoreRecord*>> pairs;
  for (const auto& r : store.records) {
    auto [it, inserted] = pairs.try_emplace(r.id, nullptr, nullptr);
    if (inserted) order.push_back(r.id);
    (r.variant == backend::Variant::kOriginal ? it->second.first : it->second.second) = &r;
  }
  for (const auto& id : order) {
    const auto [orig, pert] = pairs.at(id);
    if (!orig || !pert) continue;
    out.push_back(detect_pair(id, store.matrix(*orig), store.matrix(*pert), config));
  }
  return out;
}

std::string detection_json(const Detection& detection) {
  nlohmann::ordered_json j;
  j["id"] = detection.id;
  j["similarity"] = detection.similarity;
  j["label"] = detection.label;
  return j.dump();
}

Evaluation evaluate(const score::ScoreMatrix& matrix, const DetectorConfig* config) {
  const LayerSearch ls = search_layer(matrix);
  Evaluation e;
  for (std::size_t k = 0; k < ls.layers.size(); ++k) e.per_layer.push_back({ls.layers[k], ls.auroc[k], ls.ap[k]});
  if (config) {
    if (config->optimal_layer < 1 || config->optimal_layer > matrix.layers) {
      fail(ErrorCode::kInvalidArgument, "config layer " + std::to_string(config->optimal_layer) +
                                            " outside the score matrix");
    }
    e.optimal_layer = config->optimal_layer;
    const auto column = matrix.column(config->optimal_layer);
    const auto labels = matrix.labels();
    e.at_optimal = metrics::report(column, labels, config->threshold);
    e.rates = metrics::rates_at(column, labels, config->threshold.tau);
  }
  return e;
}

std::string per_layer_csv(const Evaluation& evaluation) {
  std::string out = "layer,auroc,ap\n";
  for (const auto& m : evaluation.per_layer) {
    out += std::to_string(m.layer) + "," + format_double(m.auroc) + "," + format_double(m.ap) + "\n";
  }
  return out;
}

}  // namespace layerwise::search
