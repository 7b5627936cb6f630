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

#include "layerwise/corpus/manifest.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace fs = std::filesystem;

namespace layerwise::corpus {
namespace {

std::string line_prefix(const std::string& name, std::size_t line) {
  return name + ":" + std::to_string(line) + ": ";
}

Label parse_label(const std::string& raw, const std::string& where) {
  const std::string v = trim(raw);
  if (v == "0") return Label::kReal;
  if (v == "1") return Label::kGenerated;
  fail(ErrorCode::kParse, where + "label must be 0 or 1, got '" + v + "'");
}

fs::path resolve(const fs::path& base_dir, const std::string& raw) {
  fs::path p(raw);
  if (p.is_relative() && !base_dir.empty()) return base_dir / p;
  return p;
}

// RFC 4180 style: quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) fail(ErrorCode::kParse, where + "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Manifest::Manifest(std::string name, std::vector<ImageRecord> records)
    : name_(std::move(name)), records_(std::move(records)) {
  if (records_.empty()) fail(ErrorCode::kInvalidArgument, "manifest '" + name_ + "' is empty");
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> paths;
  for (const auto& r : records_) {
    if (r.id.empty()) fail(ErrorCode::kInvalidArgument, "manifest '" + name_ + "': empty id");
    if (!ids.insert(r.id).second) {
      fail(ErrorCode::kInvalidArgument, "manifest '" + name_ + "': duplicate id '" + r.id + "'");
    }
    if (!paths.insert(r.path.lexically_normal().generic_string()).second) {
      fail(ErrorCode::kInvalidArgument,
           "manifest '" + name_ + "': duplicate path '" + r.path.string() + "'");
    }
  }
}

std::size_t Manifest::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [label](const ImageRecord& r) { return r.label == label; }));
}

const ImageRecord* Manifest::find(const std::string& id) const {
  for (const auto& r : records_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

Manifest parse_manifest_csv(const std::string& text, const std::string& name,
                            const fs::path& base_dir) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> columns;
  std::vector<ImageRecord> records;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    const std::string where = line_prefix(name, line_no);
    auto fields = split_csv_line(line, where);
    if (columns.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) columns[trim(fields[i])] = i;
      for (const char* required : {"id", "path", "label"}) {
        if (!columns.count(required)) {
          fail(ErrorCode::kParse, where + "header is missing column '" + required + "'");
        }
      }
      continue;
    }
    if (fields.size() != columns.size()) {
      fail(ErrorCode::kParse, where + "expected " + std::to_string(columns.size()) +
                                  " fields, got " + std::to_string(fields.size()));
    }
    ImageRecord r;
    r.id = trim(fields[columns.at("id")]);
    r.path = resolve(base_dir, trim(fields[columns.at("path")]));
    r.label = parse_label(fields[columns.at("label")], where);
    if (auto it = columns.find("generator_tag"); it != columns.end()) {
      std::string tag = trim(fields[it->second]);
      if (!tag.empty()) r.generator_tag = std::move(tag);
    }
    if (r.id.empty()) fail(ErrorCode::kParse, where + "empty id");
    if (!seen_ids.insert(r.id).second) fail(ErrorCode::kParse, where + "duplicate id '" + r.id + "'");
    records.push_back(std::move(r));
  }
  if (columns.empty()) fail(ErrorCode::kParse, name + ": missing header row");
  return Manifest(name, std::move(records));
}

Manifest parse_manifest_jsonl(const std::string& text, const std::string& name,
                              const fs::path& base_dir) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<ImageRecord> records;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = line_prefix(name, line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParse, where + e.what());
    }
    if (!obj.is_object()) fail(ErrorCode::kParse, where + "expected a JSON object");
    for (const char* required : {"id", "path", "label"}) {
      if (!obj.contains(required)) fail(ErrorCode::kParse, where + "missing key '" + required + "'");
    }
    ImageRecord r;
    if (!obj["id"].is_string() || !obj["path"].is_string()) {
      fail(ErrorCode::kParse, where + "id and path must be strings");
    }
    r.id = obj["id"].get<std::string>();
    r.path = resolve(base_dir, obj["path"].get<std::string>());
    const auto& label = obj["label"];
    if (label.is_number_integer()) {
      r.label = parse_label(std::to_string(label.get<long long>()), where);
    } else if (label.is_string()) {
      r.label = parse_label(label.get<std::string>(), where);
    } else {
      fail(ErrorCode::kParse, where + "label must be 0 or 1");
    }
    if (obj.contains("generator_tag") && obj["generator_tag"].is_string()) {
      std::string tag = obj["generator_tag"].get<std::string>();
      if (!tag.empty()) r.generator_tag = std::move(tag);
    }
    if (r.id.empty()) fail(ErrorCode::kParse, where + "empty id");
    if (!seen_ids.insert(r.id).second) fail(ErrorCode::kParse, where + "duplicate id '" + r.id + "'");
    records.push_back(std::move(r));
  }
  return Manifest(name, std::move(records));
}

Manifest load_manifest(const fs::path& path, ManifestFormat format) {
  const std::string text = read_file(path);
  const std::string name = path.filename().string();
  const fs::path base = path.parent_path();
  return format == ManifestFormat::kJsonl ? parse_manifest_jsonl(text, name, base)
                                          : parse_manifest_csv(text, name, base);
}

Manifest load_manifest(const fs::path& path) {
  const std::string ext = to_lower(path.extension().string());
  return load_manifest(path, (ext == ".jsonl" || ext == ".ndjson") ? ManifestFormat::kJsonl
                                                                    : ManifestFormat::kCsv);
}

std::string to_csv(const Manifest& manifest) {
  std::string out = "id,path,label,generator_tag\n";
  for (const auto& r : manifest.records()) {
    out += csv_escape(r.id);
    out += ',';
    out += csv_escape(r.path.string());
    out += ',';
    out += std::to_string(to_int(r.label));
    out += ',';
    if (r.generator_tag) out += csv_escape(*r.generator_tag);
    out += '\n';
  }
  return out;
}

void write_manifest_csv(const Manifest& manifest, const fs::path& path) {
  write_file(path, to_csv(manifest));
}

bool is_image_file(const fs::path& path) {
  const std::string ext = to_lower(path.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".webp";
}

Manifest scan_directory(const fs::path& root, const std::string& real_subdir,
                        const std::string& fake_subdir) {
  std::vector<ImageRecord> records;
  for (const auto& [subdir, label] :
       {std::pair{real_subdir, Label::kReal}, std::pair{fake_subdir, Label::kGenerated}}) {
    const fs::path dir = root / subdir;
    if (!fs::is_directory(dir)) {
      fail(ErrorCode::kNotFound, "class directory does not exist: " + dir.string());
    }
    std::size_t found = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
      ImageRecord r;
      r.id = fs::relative(entry.path(), root).generic_string();
      r.path = entry.path();
      r.label = label;
      records.push_back(std::move(r));
      ++found;
    }
    if (found == 0) fail(ErrorCode::kNotFound, "class directory has no images: " + dir.string());
  }
  std::sort(records.begin(), records.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
  return Manifest(root.filename().string(), std::move(records));
}

}  // namespace layerwise::corpus
