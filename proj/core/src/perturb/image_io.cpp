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

#include "layerwise/perturb/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cmath>
#include <string>

#include "layerwise/common.hpp"

namespace layerwise::perturb {
namespace {

// OpenCV stores BGR; the toolkit is RGB throughout.
Image from_bgr8(const cv::Mat& mat) {
  std::vector<float> data(static_cast<std::size_t>(mat.rows) * mat.cols * 3);
  std::size_t k = 0;
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < mat.cols; ++x) {
      for (int c = 0; c < 3; ++c) data[k++] = static_cast<float>(row[x][2 - c]) / 255.0f;
    }
  }
  return Image(mat.rows, mat.cols, std::move(data));
}

cv::Mat to_bgr8(const Image& image) {
  cv::Mat mat(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::round(static_cast<double>(image.at(y, x, c)) * 255.0);
        row[x][2 - c] = static_cast<std::uint8_t>(v);
      }
    }
  }
  return mat;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) fail(ErrorCode::kParse, "cannot decode empty image buffer");
  const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1,
                       const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat decoded;
  try {
    decoded = cv::imdecode(buffer, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    fail(ErrorCode::kParse, std::string("image decode failed: ") + e.what());
  }
  if (decoded.empty() || decoded.type() != CV_8UC3) {
    fail(ErrorCode::kParse, "image decode failed: unsupported or corrupt data");
  }
  return from_bgr8(decoded);
}

Image load_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_image(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", to_bgr8(image), out)) fail(ErrorCode::kInvalidArgument, "png encode failed");
  return out;
}

void save_png(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Image jpeg_roundtrip(const Image& image, int quality) {
  if (quality < 1 || quality > 100) {
    fail(ErrorCode::kInvalidArgument, "jpeg quality must be in [1, 100], got " + std::to_string(quality));
  }
  std::vector<std::uint8_t> encoded;
  const std::vector<int> params = {cv::IMWRITE_JPEG_QUALITY, quality};
  if (!cv::imencode(".jpg", to_bgr8(image), encoded, params)) {
    fail(ErrorCode::kInvalidArgument, "jpeg encode failed");
  }
  return decode_image(encoded);
}

}  // namespace layerwise::perturb
