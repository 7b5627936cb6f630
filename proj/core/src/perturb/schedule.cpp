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

#include "layerwise/perturb/schedule.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "layerwise/common.hpp"

namespace layerwise::perturb {
namespace {

using Row = PerLevel<double>;

Row parse_row(const std::string& key, const std::string& values, std::size_t line_no) {
  std::istringstream in(values);
  Row row{};
  std::string token;
  int n = 0;
  while (in >> token) {
    if (n == kSeverityLevels) {
      fail(ErrorCode::kParse, "schedule line " + std::to_string(line_no) + ": '" + key +
                                  "' has more than 8 values");
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      fail(ErrorCode::kParse, "schedule line " + std::to_string(line_no) + ": bad number '" +
                                  token + "' for '" + key + "'");
    }
    row[static_cast<std::size_t>(n++)] = v;
  }
  if (n != kSeverityLevels) {
    fail(ErrorCode::kParse, "schedule line " + std::to_string(line_no) + ": '" + key + "' needs 8 values, got " +
                                std::to_string(n));
  }
  return row;
}

enum class Direction { kNonDecreasing, kNonIncreasing };

template <typename Get>
void check_monotone(const char* key, Direction dir, Get get) {
  for (int s = 1; s < kSeverityLevels; ++s) {
    const double prev = get(s - 1);
    const double cur = get(s);
    const bool ok = dir == Direction::kNonDecreasing ? cur >= prev : cur <= prev;
    if (!ok) {
      fail(ErrorCode::kInvalidArgument, std::string("schedule '") + key + "' is not monotone at severity " +
                                            std::to_string(s + 1));
    }
  }
}

template <typename Get>
void check_range(const char* key, double lo, double hi, Get get) {
  for (int s = 0; s < kSeverityLevels; ++s) {
    const double v = get(s);
    if (!(v >= lo && v <= hi)) {
      fail(ErrorCode::kInvalidArgument, std::string("schedule '") + key + "' value " + format_double(v) +
                                            " at severity " + std::to_string(s + 1) + " outside [" +
                                            format_double(lo) + ", " + format_double(hi) + "]");
    }
  }
}

std::string join(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ' ';
    out += format_double(row[i]);
  }
  return out;
}

}  // namespace

SeveritySchedule SeveritySchedule::parse(std::string_view text) {
  std::map<std::string, Row> rows;
  std::string version;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kParse, "schedule line " + std::to_string(line_no) + ": expected 'key = values'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "version") {
      version = value;
      continue;
    }
    if (rows.count(key)) {
      fail(ErrorCode::kParse, "schedule line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    rows[key] = parse_row(key, value, line_no);
  }
  if (version.empty()) fail(ErrorCode::kParse, "schedule: missing 'version'");

  const auto take = [&rows](const char* key) -> Row {
    auto it = rows.find(key);
    if (it == rows.end()) fail(ErrorCode::kParse, std::string("schedule: missing key '") + key + "'");
    Row r = it->second;
    rows.erase(it);
    return r;
  };

  SeveritySchedule s;
  s.version = version;
  s.contrast_factor = take("contrast.factor");
  const Row alpha = take("elastic_transform.alpha");
  const Row sigma = take("elastic_transform.sigma");
  const Row quality = take("jpeg_compression.quality");
  s.impulse_amount = take("impulse_noise.amount");
  s.gaussian_sigma = take("gaussian_noise.sigma");
  const Row radius = take("defocus_blur.radius");
  const Row alias = take("defocus_blur.alias_blur");
  s.shot_photons = take("shot_noise.photons");
  const Row zmax = take("zoom_blur.max_factor");
  const Row zstep = take("zoom_blur.step");
  if (!rows.empty()) fail(ErrorCode::kParse, "schedule: unknown key '" + rows.begin()->first + "'");

  for (std::size_t i = 0; i < kSeverityLevels; ++i) {
    s.elastic[i] = {alpha[i], sigma[i]};
    if (quality[i] != std::floor(quality[i])) {
      fail(ErrorCode::kParse, "schedule: jpeg_compression.quality must be integers");
    }
    s.jpeg_quality[i] = static_cast<int>(quality[i]);
    s.defocus[i] = {radius[i], alias[i]};
    s.zoom[i] = {zmax[i], zstep[i]};
  }
  s.validate();
  return s;
}

SeveritySchedule SeveritySchedule::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

const SeveritySchedule& SeveritySchedule::builtin() {
  static const SeveritySchedule schedule = parse(builtin_schedule_text());
  return schedule;
}

std::string SeveritySchedule::to_text() const {
  Row alpha{}, sigma{}, quality{}, radius{}, alias{}, zmax{}, zstep{};
  for (std::size_t i = 0; i < kSeverityLevels; ++i) {
    alpha[i] = elastic[i].alpha;
    sigma[i] = elastic[i].sigma;
    quality[i] = jpeg_quality[i];
    radius[i] = defocus[i].radius;
    alias[i] = defocus[i].alias_blur;
    zmax[i] = zoom[i].max_factor;
    zstep[i] = zoom[i].step;
  }
  std::string out = "version = " + version + "\n";
  out += "contrast.factor = " + join(contrast_factor) + "\n";
  out += "elastic_transform.alpha = " + join(alpha) + "\n";
  out += "elastic_transform.sigma = " + join(sigma) + "\n";
  out += "jpeg_compression.quality = " + join(quality) + "\n";
  out += "impulse_noise.amount = " + join(impulse_amount) + "\n";
  out += "gaussian_noise.sigma = " + join(gaussian_sigma) + "\n";
  out += "defocus_blur.radius = " + join(radius) + "\n";
  out += "defocus_blur.alias_blur = " + join(alias) + "\n";
  out += "shot_noise.photons = " + join(shot_photons) + "\n";
  out += "zoom_blur.max_factor = " + join(zmax) + "\n";
  out += "zoom_blur.step = " + join(zstep) + "\n";
  return out;
}

void SeveritySchedule::validate() const {
  const auto at = [](const auto& row) {
    return [&row](int s) { return static_cast<double>(row[static_cast<std::size_t>(s)]); };
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();

  check_range("contrast.factor", 0.0, 1.0, at(contrast_factor));
  check_monotone("contrast.factor", Direction::kNonIncreasing, at(contrast_factor));

  const auto alpha = [this](int s) { return elastic[static_cast<std::size_t>(s)].alpha; };
  const auto sigma = [this](int s) { return elastic[static_cast<std::size_t>(s)].sigma; };
  check_range("elastic_transform.alpha", 0.0, kInf, alpha);
  check_monotone("elastic_transform.alpha", Direction::kNonDecreasing, alpha);
  check_range("elastic_transform.sigma", 1e-6, kInf, sigma);

  check_range("jpeg_compression.quality", 1.0, 100.0, at(jpeg_quality));
  check_monotone("jpeg_compression.quality", Direction::kNonIncreasing, at(jpeg_quality));

  check_range("impulse_noise.amount", 0.0, 1.0, at(impulse_amount));
  check_monotone("impulse_noise.amount", Direction::kNonDecreasing, at(impulse_amount));

  check_range("gaussian_noise.sigma", 0.0, kInf, at(gaussian_sigma));
  check_monotone("gaussian_noise.sigma", Direction::kNonDecreasing, at(gaussian_sigma));

  const auto radius = [this](int s) { return defocus[static_cast<std::size_t>(s)].radius; };
  const auto alias = [this](int s) { return defocus[static_cast<std::size_t>(s)].alias_blur; };
  check_range("defocus_blur.radius", 1e-6, kInf, radius);
  check_monotone("defocus_blur.radius", Direction::kNonDecreasing, radius);
  check_range("defocus_blur.alias_blur", 0.0, kInf, alias);
  check_monotone("defocus_blur.alias_blur", Direction::kNonDecreasing, alias);

  // Fewer photons means stronger noise.
  check_range("shot_noise.photons", 1e-6, kInf, at(shot_photons));
  check_monotone("shot_noise.photons", Direction::kNonIncreasing, at(shot_photons));

  const auto zmax = [this](int s) { return zoom[static_cast<std::size_t>(s)].max_factor; };
  const auto zstep = [this](int s) { return zoom[static_cast<std::size_t>(s)].step; };
  check_range("zoom_blur.max_factor", 1.0, kInf, zmax);
  check_monotone("zoom_blur.max_factor", Direction::kNonDecreasing, zmax);
  check_range("zoom_blur.step", 1e-6, kInf, zstep);
  check_monotone("zoom_blur.step", Direction::kNonDecreasing, zstep);
}

}  // namespace layerwise::perturb
