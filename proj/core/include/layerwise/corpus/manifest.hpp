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

#ifndef LAYERWISE_CORPUS_MANIFEST_HPP_
#define LAYERWISE_CORPUS_MANIFEST_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "layerwise/common.hpp"

namespace layerwise::corpus {

struct ImageRecord {
  std::string id;
  std::filesystem::path path;
  Label label = Label::kReal;
  std::optional<std::string> generator_tag;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// Ordered, non-empty list of labeled images with unique ids and distinct paths.
class Manifest {
 public:
  Manifest(std::string name, std::vector<ImageRecord> records);

  const std::string& name() const { return name_; }
  const std::vector<ImageRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::size_t count(Label label) const;
  const ImageRecord* find(const std::string& id) const;

 private:
  std::string name_;
  std::vector<ImageRecord> records_;
};

enum class ManifestFormat { kCsv, kJsonl };

// Relative paths are resolved against the manifest file's directory.
Manifest load_manifest(const std::filesystem::path& path, ManifestFormat format);
// Format inferred from the extension (.jsonl / .ndjson, otherwise CSV).
Manifest load_manifest(const std::filesystem::path& path);

Manifest parse_manifest_csv(const std::string& text, const std::string& name,
                            const std::filesystem::path& base_dir = {});
Manifest parse_manifest_jsonl(const std::string& text, const std::string& name,
                              const std::filesystem::path& base_dir = {});

// Canonical header `id,path,label,generator_tag`.
std::string to_csv(const Manifest& manifest);
void write_manifest_csv(const Manifest& manifest, const std::filesystem::path& path);

// One record per png/jpg/jpeg/webp file (case-insensitive) found recursively
// under root/real_subdir (label 0) and root/fake_subdir (label 1). Ids are
// root-relative generic paths; records are sorted by id.
Manifest scan_directory(const std::filesystem::path& root, const std::string& real_subdir,
                        const std::string& fake_subdir);

bool is_image_file(const std::filesystem::path& path);

}  // namespace layerwise::corpus

#endif  // LAYERWISE_CORPUS_MANIFEST_HPP_
