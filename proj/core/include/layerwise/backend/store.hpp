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

// Embedding store, format v1 (all integers little-endian):
//
//   "MLEB" | u32 version | u32 n | n bytes of UTF-8 JSON header | u64 count
//   count x ( u16 k | k id bytes | u8 label | u8 variant | L*d float32 )
//   u32 CRC-32 (zlib polynomial) of every preceding byte
//
// variant 0 is the original image, 1 the perturbed one. A directory of
// *.mleb shards with identical headers is read as their concatenation in
// file-name order.

#ifndef LAYERWISE_BACKEND_STORE_HPP_
#define LAYERWISE_BACKEND_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "layerwise/backend/embedder.hpp"
#include "layerwise/common.hpp"
#include "layerwise/perturb/perturb.hpp"

namespace layerwise::backend {

inline constexpr char kStoreMagic[4] = {'M', 'L', 'E', 'B'};
inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::string_view kPerturbationOrder = "perturb-then-resize";
inline constexpr std::string_view kSeedPolicy = "per-image: derive_seed(perturbation.seed, image_id)";

enum class Variant : std::uint8_t { kOriginal = 0, kPerturbed = 1 };

std::string_view to_string(Variant variant);

struct StoreHeader {
  std::string model_name;
  int layers = 0;
  int dim = 0;
  perturb::PerturbationSpec perturbation;
  std::string schedule_version;
  std::string seed_policy{kSeedPolicy};
  std::string perturbation_order{kPerturbationOrder};
  std::string rng;  // generator id and version, e.g. "philox4x32-10/1"
  std::string toolkit_version{kToolkitVersion};
  std::map<std::string, std::string> extra;  // provenance such as config_digest

  std::string to_json() const;
  static StoreHeader from_json(std::string_view text);

  friend bool operator==(const StoreHeader&, const StoreHeader&) = default;
};

struct StoreRecord {
  std::string id;
  Label label = Label::kReal;
  Variant variant = Variant::kOriginal;
  std::vector<float> values;  // L x d row-major

  friend bool operator==(const StoreRecord&, const StoreRecord&) = default;
};

struct EmbeddingStore {
  StoreHeader header;
  std::vector<StoreRecord> records;

  // Shapes match the header; at most one record per (id, variant); both
  // variants of an id carry the same label. Throws kInvalidArgument.
  void validate() const;
  const StoreRecord* find(std::string_view id, Variant variant) const;
  std::size_t count(Variant variant) const;
  LayerMatrix matrix(const StoreRecord& record) const;

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;
};

std::string serialize_store(const EmbeddingStore& store);
// Throws kCorrupt on bad magic, version, checksum or truncation.
EmbeddingStore parse_store(std::string_view bytes);

void store_write(const EmbeddingStore& store, const std::filesystem::path& path);
// Accepts a single store file or a shard directory.
EmbeddingStore store_read(const std::filesystem::path& path);

// One shard per image id (both variants together), named by first-appearance
// index so reading the directory restores record order.
void store_write_shards(const EmbeddingStore& store, const std::filesystem::path& dir);

}  // namespace layerwise::backend

#endif  // LAYERWISE_BACKEND_STORE_HPP_
