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

#include "run_config.hpp"

#include <algorithm>
#include <charconv>

#include "layerwise/common.hpp"

namespace layerwise::cli {

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"model", "", "model package directory or its model.json"},
      {"manifest", "", "image manifest (CSV or JSONL)"},
      {"store", "", "embedding store file or shard directory"},
      {"stores", "", "comma-separated stores for a joint search"},
      {"out_dir", "out", "output directory", false},
      {"seed", "0", "root seed"},
      {"kind", "defocus_blur", "perturbation kind"},
      {"severity", "7", "perturbation severity 1..8"},
      {"fraction", "30", "search subset size, percent of the reference size"},
      {"reference_size", "0", "size the fraction refers to (0: the search source itself)"},
      {"balanced", "true", "draw the search subset class-balanced"},
      {"layers", "all", "layers to search, e.g. 1-24 or 3,5,7-9"},
      {"kinds", "", "joint search kinds ('all' or a list); empty: --kind only"},
      {"severities", "", "joint search severities; empty: --severity only"},
      {"threshold", "youden", "youden, balanced_accuracy or fixed_fpr(alpha)"},
      {"detector", "", "detector config JSON written by search"},
      {"image", "", "single image to classify"},
      {"id", "", "image id for --image (default: file name)"},
      {"max_failure_fraction", "0", "tolerated share of failed extractions"},
      {"sample_cap", "2000", "images per layer for intrinsic dimension"},
      {"trim_fraction", "0.1", "share of the largest neighbor ratios discarded"},
      {"id_fit", "mle", "intrinsic dimension fit: mle or linear"},
      {"variant", "original", "store variant for intrinsic dimension"},
      {"bins", "20", "histogram bins"},
      {"schedule", "", "severity schedule file (default: built-in)"},
      {"threads", "0", "worker threads (0: all cores)", false},
  };
  return keys;
}

const KeySpec* find_key(std::string_view key) {
  for (const auto& k : config_keys()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

namespace {

std::string normalize_key(std::string_view key) {
  std::string k = trim(key);
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

template <typename T>
T parse_number(const std::string& text, std::string_view key) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError("invalid value '" + text + "' for " + std::string(key));
  }
  return value;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  int line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = normalize_key(line.substr(0, eq));
    if (!find_key(key)) throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig RunConfig::resolve(const std::map<std::string, std::string>& command_line, const std::string& config_file) {
  RunConfig c;
  for (const auto& k : config_keys()) c.values_[std::string(k.key)] = std::string(k.default_value);
  if (!config_file.empty()) {
    for (const auto& [k, v] : parse_config_text(read_file(config_file))) {
      c.values_[k] = v;
      c.explicit_.insert(k);
    }
  }
  for (const auto& [k, v] : command_line) {
    const std::string key = normalize_key(k);
    if (!find_key(key)) throw UsageError("unknown option '" + key + "'");
    c.values_[key] = v;
    c.explicit_.insert(key);
  }
  return c;
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(std::string(key));
  if (it == values_.end()) throw UsageError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

bool RunConfig::is_set(std::string_view key) const { return explicit_.count(std::string(key)) > 0; }

int RunConfig::get_int(std::string_view key) const { return parse_number<int>(get(key), key); }

double RunConfig::get_double(std::string_view key) const { return parse_number<double>(get(key), key); }

std::uint64_t RunConfig::get_u64(std::string_view key) const { return parse_number<std::uint64_t>(get(key), key); }

bool RunConfig::get_bool(std::string_view key) const {
  const std::string v = to_lower(get(key));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("invalid boolean '" + get(key) + "' for " + std::string(key));
}

std::filesystem::path RunConfig::require_path(std::string_view key) const {
  const std::string& v = get(key);
  if (v.empty()) throw UsageError("--" + std::string(key) + " is required");
  if (!std::filesystem::exists(v)) fail(ErrorCode::kNotFound, std::string(key) + " path does not exist: " + v);
  return v;
}

std::vector<std::string> RunConfig::get_list(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& item : split(get(key), ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::map<std::string, std::string> RunConfig::digest_entries() const {
  std::map<std::string, std::string> out;
  for (const auto& k : config_keys()) {
    if (k.in_digest) out[std::string(k.key)] = get(k.key);
  }
  return out;
}

std::string RunConfig::digest(std::string_view command) const {
  std::string canonical = "command=" + std::string(command) + "\n";
  for (const auto& [k, v] : digest_entries()) canonical += k + "=" + v + "\n";
  return hex64(fnv1a64(canonical));
}

}  // namespace layerwise::cli
