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

// Flat key = value run configuration. Precedence: command line, then the
// --config file, then built-in defaults.

#ifndef LAYERWISE_TOOLS_RUN_CONFIG_HPP_
#define LAYERWISE_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace layerwise::cli {

// Bad flags, unknown keys or values that do not parse; exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string_view key;
  std::string_view default_value;
  std::string_view help;
  bool in_digest = true;  // false for keys that cannot change any output
};

const std::vector<KeySpec>& config_keys();
const KeySpec* find_key(std::string_view key);

// `key = value` lines; `#` starts a comment; dashes in keys read as
// underscores. Throws UsageError on malformed lines or unknown keys.
std::map<std::string, std::string> parse_config_text(std::string_view text);

class RunConfig {
 public:
  static RunConfig resolve(const std::map<std::string, std::string>& command_line, const std::string& config_file);

  const std::string& get(std::string_view key) const;
  // True when the command line or the config file supplied the key.
  bool is_set(std::string_view key) const;

  int get_int(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  // UsageError when empty; kNotFound when the path does not exist.
  std::filesystem::path require_path(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;

  // Digest-relevant entries, sorted by key.
  std::map<std::string, std::string> digest_entries() const;
  // 16 hex digits over the command name and the digest entries.
  std::string digest(std::string_view command) const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

}  // namespace layerwise::cli

#endif  // LAYERWISE_TOOLS_RUN_CONFIG_HPP_
