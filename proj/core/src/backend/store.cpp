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

#include "layerwise/backend/store.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace fs = std::filesystem;

namespace layerwise::backend {

std::string_view to_string(Variant variant) {
  return variant == Variant::kOriginal ? "original" : "perturbed";
}

std::string StoreHeader::to_json() const {
  nlohmann::json j;
  j["model"] = model_name;
  j["layers"] = layers;
  j["dim"] = dim;
  j["perturbation"] = {{"kind", std::string(perturb::to_string(perturbation.kind))},
                       {"severity", perturbation.severity},
                       {"seed", perturbation.seed}};
  j["schedule_version"] = schedule_version;
  j["seed_policy"] = seed_policy;
  j["perturbation_order"] = perturbation_order;
  j["rng"] = rng;
  j["toolkit_version"] = toolkit_version;
  j["extra"] = extra;
  return j.dump();
}

StoreHeader StoreHeader::from_json(std::string_view text) {
  StoreHeader h;
  try {
    const auto j = nlohmann::json::parse(text);
    h.model_name = j.at("model").get<std::string>();
    h.layers = j.at("layers").get<int>();
    h.dim = j.at("dim").get<int>();
    const auto& p = j.at("perturbation");
    h.perturbation.kind = perturb::parse_kind(p.at("kind").get<std::string>());
    h.perturbation.severity = p.at("severity").get<int>();
    h.perturbation.seed = p.at("seed").get<std::uint64_t>();
    h.schedule_version = j.at("schedule_version").get<std::string>();
    h.seed_policy = j.at("seed_policy").get<std::string>();
    h.perturbation_order = j.at("perturbation_order").get<std::string>();
    h.rng = j.at("rng").get<std::string>();
    h.toolkit_version = j.at("toolkit_version").get<std::string>();
    h.extra = j.value("extra", std::map<std::string, std::string>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorrupt, std::string("store header: ") + e.what());
  }
  return h;
}

void EmbeddingStore::validate() const {
  if (header.layers < 1 || header.dim < 1) fail(ErrorCode::kInvalidArgument, "store header needs layers, dim >= 1");
  const std::size_t width = static_cast<std::size_t>(header.layers) * static_cast<std::size_t>(header.dim);
  std::set<std::pair<std::string, Variant>> seen;
  std::unordered_map<std::string, Label> labels;
  for (const auto& r : records) {
    if (r.values.size() != width) {
      fail(ErrorCode::kInvalidArgument, "record '" + r.id + "' has " + std::to_string(r.values.size()) +
                                            " values, header says " + std::to_string(width));
    }
    if (r.id.empty() || r.id.size() > 0xffff) fail(ErrorCode::kInvalidArgument, "record id length out of range");
    if (!seen.emplace(r.id, r.variant).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate record (" + r.id + ", " + std::string(to_string(r.variant)) + ")");
    }
    auto [it, inserted] = labels.emplace(r.id, r.label);
    if (!inserted && it->second != r.label) fail(ErrorCode::kInvalidArgument, "record '" + r.id + "' has two labels");
  }
}

const StoreRecord* EmbeddingStore::find(std::string_view id, Variant variant) const {
  for (const auto& r : records) {
    if (r.id == id && r.variant == variant) return &r;
  }
  return nullptr;
}

std::size_t EmbeddingStore::count(Variant variant) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [variant](const StoreRecord& r) { return r.variant == variant; }));
}

LayerMatrix EmbeddingStore::matrix(const StoreRecord& record) const {
  LayerMatrix m;
  m.layers = header.layers;
  m.dim = header.dim;
  m.values = record.values;
  return m;
}

namespace {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t k = 0; k < sizeof(T); ++k) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * k)) & 0xffu));
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t at = 0;
  while (at < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - at, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + at), chunk);
    at += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::kCorrupt, std::string("store truncated while reading ") + what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  template <class T>
  T le(const char* what) {
    const auto raw = take(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(raw[k])) << (8 * k);
    return static_cast<T>(v);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_store(const EmbeddingStore& store) {
  store.validate();
  std::string out;
  const std::string header = store.header.to_json();
  const std::size_t width = static_cast<std::size_t>(store.header.layers) * static_cast<std::size_t>(store.header.dim);
  out.reserve(16 + header.size() + store.records.size() * (width * 4 + 32));
  out.append(kStoreMagic, 4);
  put_le<std::uint32_t>(out, kStoreVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  put_le<std::uint64_t>(out, store.records.size());
  for (const auto& r : store.records) {
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(r.id.size()));
    out += r.id;
    put_u8(out, static_cast<std::uint8_t>(r.label));
    put_u8(out, static_cast<std::uint8_t>(r.variant));
    for (float v : r.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  put_le<std::uint32_t>(out, crc32_of(out));
  return out;
}

EmbeddingStore parse_store(std::string_view bytes) {
  Reader head(bytes);
  if (head.take(4, "magic") != std::string_view(kStoreMagic, 4)) fail(ErrorCode::kCorrupt, "not an embedding store (bad magic)");
  const auto version = head.le<std::uint32_t>("version");
  if (version != kStoreVersion) {
    fail(ErrorCode::kCorrupt, "unsupported store version " + std::to_string(version) + " (expected " +
                                  std::to_string(kStoreVersion) + ")");
  }
  if (bytes.size() < 4 + 4 + 4 + 8 + 4) fail(ErrorCode::kCorrupt, "store truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4));
  if (crc32_of(body) != tail.le<std::uint32_t>("checksum")) {
    fail(ErrorCode::kCorrupt, "store checksum mismatch (corrupt or truncated file)");
  }

  Reader in(body);
  in.take(8, "magic");
  const auto header_len = in.le<std::uint32_t>("header length");
  EmbeddingStore store;
  store.header = StoreHeader::from_json(in.take(header_len, "header"));
  const auto count = in.le<std::uint64_t>("record count");
  if (store.header.layers < 1 || store.header.dim < 1) fail(ErrorCode::kCorrupt, "store header has no shape");
  const std::size_t width = static_cast<std::size_t>(store.header.layers) * static_cast<std::size_t>(store.header.dim);
  if (count > in.remaining() / (width * 4 + 4)) fail(ErrorCode::kCorrupt, "store record count exceeds file size");
  store.records.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t k = 0; k < count; ++k) {
    StoreRecord r;
    const auto id_len = in.le<std::uint16_t>("id length");
    r.id = std::string(in.take(id_len, "id"));
    const auto label = in.le<std::uint8_t>("label");
    const auto variant = in.le<std::uint8_t>("variant");
    if (label > 1) fail(ErrorCode::kCorrupt, "record '" + r.id + "' has label " + std::to_string(label));
    if (variant > 1) fail(ErrorCode::kCorrupt, "record '" + r.id + "' has variant " + std::to_string(variant));
    r.label = static_cast<Label>(label);
    r.variant = static_cast<Variant>(variant);
    r.values.resize(width);
    const auto raw = in.take(width * 4, "embedding");
    for (std::size_t j = 0; j < width; ++j) {
      std::uint32_t w = 0;
      for (std::size_t b = 0; b < 4; ++b) w |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(raw[j * 4 + b])) << (8 * b);
      r.values[j] = std::bit_cast<float>(w);
    }
    store.records.push_back(std::move(r));
  }
  if (in.remaining() != 0) fail(ErrorCode::kCorrupt, "trailing bytes after the last record");
  try {
    store.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kCorrupt, e.what());
  }
  return store;
}

void store_write(const EmbeddingStore& store, const fs::path& path) { write_file(path, serialize_store(store)); }

EmbeddingStore store_read(const fs::path& path) {
  if (!fs::is_directory(path)) return parse_store(read_file(path));
  std::vector<fs::path> shards;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mleb") shards.push_back(entry.path());
  }
  if (shards.empty()) fail(ErrorCode::kNotFound, "no .mleb shards in " + path.string());
  std::sort(shards.begin(), shards.end());
  EmbeddingStore merged;
  for (std::size_t k = 0; k < shards.size(); ++k) {
    EmbeddingStore part;
    try {
      part = parse_store(read_file(shards[k]));
    } catch (const Error& e) {
      fail(e.code(), shards[k].filename().string() + ": " + e.what());
    }
    if (k == 0) {
      merged.header = part.header;
    } else if (!(part.header == merged.header)) {
      fail(ErrorCode::kCorrupt, "shard " + shards[k].filename().string() + " has a different header");
    }
    for (auto& r : part.records) merged.records.push_back(std::move(r));
  }
  try {
    merged.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kCorrupt, std::string("shard directory: ") + e.what());
  }
  return merged;
}

void store_write_shards(const EmbeddingStore& store, const fs::path& dir) {
  store.validate();
  fs::create_directories(dir);
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const StoreRecord*>> groups;
  for (const auto& r : store.records) {
    auto& g = groups[r.id];
    if (g.empty()) order.push_back(r.id);
    g.push_back(&r);
  }
  if (order.empty()) {
    EmbeddingStore empty;
    empty.header = store.header;
    store_write(empty, dir / "00000000.mleb");
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    EmbeddingStore shard;
    shard.header = store.header;
    for (const StoreRecord* r : groups[order[k]]) shard.records.push_back(*r);
    char name[32];
    std::snprintf(name, sizeof(name), "%08zu.mleb", k);
    store_write(shard, dir / name);
  }
}

}  // namespace layerwise::backend
