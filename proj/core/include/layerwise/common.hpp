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

#ifndef LAYERWISE_COMMON_HPP_
#define LAYERWISE_COMMON_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace layerwise {

#ifdef LAYERWISE_VERSION_STRING
inline constexpr std::string_view kToolkitVersion = LAYERWISE_VERSION_STRING;
#else
inline constexpr std::string_view kToolkitVersion = "0.0.0";
#endif

enum class ErrorCode {
  kInvalidArgument,  // caller passed something outside the contract
  kParse,            // malformed input file
  kNotFound,         // missing file, directory, graph value or record
  kCorrupt,          // checksum, magic or version mismatch, truncation
  kExtraction,       // model or image pipeline failure for some image
  kBudgetExceeded,   // too many extraction failures
};

std::string_view to_string(ErrorCode code);

// Binary class of an image. Generated images are the positive class.
enum class Label : std::uint8_t { kReal = 0, kGenerated = 1 };

inline int to_int(Label label) { return static_cast<int>(label); }

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

// Shortest decimal representation that round-trips (std::to_chars).
std::string format_double(double value);

// 64-bit FNV-1a, used for config digests and seed derivation.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Compensated (Neumaier) summation.
class KahanSum {
 public:
  void add(double value);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// Whole-file helpers. read_file throws kNotFound; write_file creates parent
// directories.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char delimiter);
std::string to_lower(std::string_view text);

}  // namespace layerwise

#endif  // LAYERWISE_COMMON_HPP_
