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

#include "layerwise/score/score.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "layerwise/parallel.hpp"

namespace layerwise::score {

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::kInvalidArgument, "cosine of vectors of length " + std::to_string(a.size()) + " and " +
                                          std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k], y = b[k];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::kInvalidArgument, "cosine similarity of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void ScoreMatrix::validate() const {
  std::unordered_set<std::string> ids;
  for (const auto& r : rows) {
    if (static_cast<int>(r.similarities.size()) != layers) {
      fail(ErrorCode::kInvalidArgument, "score row '" + r.id + "' has " + std::to_string(r.similarities.size()) +
                                            " layers, expected " + std::to_string(layers));
    }
    if (!ids.insert(r.id).second) fail(ErrorCode::kInvalidArgument, "duplicate score row id '" + r.id + "'");
  }
}

std::size_t ScoreMatrix::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [label](const PairScoreRow& r) { return r.label == label; }));
}

std::vector<double> ScoreMatrix::column(int layer) const {
  if (layer < 1 || layer > layers) {
    fail(ErrorCode::kInvalidArgument, "layer " + std::to_string(layer) + " outside 1.." + std::to_string(layers));
  }
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.similarities[static_cast<std::size_t>(layer - 1)]);
  return out;
}

std::vector<Label> ScoreMatrix::labels() const {
  std::vector<Label> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

PairScoreRow pair_scores(const std::string& id, Label label, const backend::LayerMatrix& original,
                         const backend::LayerMatrix& perturbed) {
  if (original.layers != perturbed.layers || original.dim != perturbed.dim) {
    fail(ErrorCode::kInvalidArgument, "embedding shapes differ for '" + id + "'");
  }
  PairScoreRow row{id, label, {}};
  row.similarities.reserve(static_cast<std::size_t>(original.layers));
  for (int l = 0; l < original.layers; ++l) {
    try {
      row.similarities.push_back(cosine_similarity(original.row(l), perturbed.row(l)));
    } catch (const Error& e) {
      fail(e.code(), "'" + id + "' layer " + std::to_string(l + 1) + ": " + e.what());
    }
  }
  return row;
}

ScoredStore score_store(const backend::EmbeddingStore& store, unsigned threads) {
  using backend::Variant;
  struct Pair {
    const backend::StoreRecord* original = nullptr;
    const backend::StoreRecord* perturbed = nullptr;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pair> pairs;
  for (const auto& r : store.records) {
    auto [it, inserted] = pairs.try_emplace(r.id);
    if (inserted) order.push_back(r.id);
    (r.variant == Variant::kOriginal ? it->second.original : it->second.perturbed) = &r;
  }
  ScoredStore out;
  out.matrix.layers = store.header.layers;
  std::vector<const Pair*> complete;
  for (const auto& id : order) {
    const Pair& p = pairs[id];
    if (!p.original || !p.perturbed) {
      out.skipped.push_back({id, p.original ? "missing perturbed variant" : "missing original variant"});
      continue;
    }
    complete.push_back(&p);
  }
  out.matrix.rows.resize(complete.size());
  parallel_for(complete.size(), threads, [&](std::size_t k) {
    const Pair& p = *complete[k];
    out.matrix.rows[k] = pair_scores(p.original->id, p.original->label, store.matrix(*p.original),
                                     store.matrix(*p.perturbed));
  });
  return out;
}

MeanProfile mean_profile(const ScoreMatrix& matrix) {
  matrix.validate();
  MeanProfile p;
  p.layers = matrix.layers;
  const auto n = static_cast<std::size_t>(matrix.layers);
  std::vector<KahanSum> real(n), fake(n);
  for (const auto& r : matrix.rows) {
    auto& acc = r.label == Label::kReal ? real : fake;
    (r.label == Label::kReal ? p.n_real : p.n_fake) += 1;
    for (std::size_t l = 0; l < n; ++l) acc[l].add(r.similarities[l]);
  }
  auto finish = [n](const std::vector<KahanSum>& acc, std::size_t count) -> std::optional<std::vector<double>> {
    if (count == 0) return std::nullopt;
    std::vector<double> m(n);
    for (std::size_t l = 0; l < n; ++l) m[l] = std::clamp(acc[l].value() / static_cast<double>(count), -1.0, 1.0);
    return m;
  };
  p.real = finish(real, p.n_real);
  p.fake = finish(fake, p.n_fake);
  return p;
}

std::size_t histogram_bin(double value, int bins) {
  const double pos = (std::clamp(value, -1.0, 1.0) + 1.0) / 2.0 * bins;
  return std::min(static_cast<std::size_t>(std::floor(pos)), static_cast<std::size_t>(bins - 1));
}

Histogram histogram(const ScoreMatrix& matrix, int layer, int bins) {
  if (bins < 1) fail(ErrorCode::kInvalidArgument, "histogram needs at least one bin");
  const auto values = matrix.column(layer);
  Histogram h;
  h.layer = layer;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) h.edges[static_cast<std::size_t>(k)] = -1.0 + 2.0 * k / bins;
  h.real.assign(static_cast<std::size_t>(bins), 0);
  h.fake.assign(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& counts = matrix.rows[i].label == Label::kReal ? h.real : h.fake;
    ++counts[histogram_bin(values[i], bins)];
  }
  return h;
}

std::string score_matrix_csv(const ScoreMatrix& matrix) {
  std::string out = "id,label";
  for (int l = 1; l <= matrix.layers; ++l) out += ",s_" + std::to_string(l);
  out += "\n";
  for (const auto& r : matrix.rows) {
    out += r.id + "," + std::to_string(to_int(r.label));
    for (double s : r.similarities) out += "," + format_double(s);
    out += "\n";
  }
  return out;
}

std::string mean_profile_csv(const MeanProfile& profile) {
  std::string out = "layer,mean_real,mean_fake,n_real,n_fake\n";
  for (int l = 0; l < profile.layers; ++l) {
    const auto k = static_cast<std::size_t>(l);
    out += std::to_string(l + 1) + ",";
    out += (profile.real ? format_double((*profile.real)[k]) : std::string()) + ",";
    out += (profile.fake ? format_double((*profile.fake)[k]) : std::string()) + ",";
    out += std::to_string(profile.n_real) + "," + std::to_string(profile.n_fake) + "\n";
  }
  return out;
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,count_real,count_fake\n";
  for (std::size_t k = 0; k + 1 < h.edges.size(); ++k) {
    out += format_double(h.edges[k]) + "," + format_double(h.edges[k + 1]) + "," + std::to_string(h.real[k]) + "," +
           std::to_string(h.fake[k]) + "\n";
  }
  return out;
}

}  // namespace layerwise::score
