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

#ifndef LAYERWISE_PERTURB_IMAGE_IO_HPP_
#define LAYERWISE_PERTURB_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "layerwise/perturb/image.hpp"

namespace layerwise::perturb {

// Decodes png/jpeg/webp to RGB in [0, 1] (8-bit value / 255). Grayscale is
// replicated to three channels and alpha is dropped.
Image load_image(const std::filesystem::path& path);
Image decode_image(std::span<const std::uint8_t> bytes);

// 8-bit export: round(v * 255).
std::vector<std::uint8_t> encode_png(const Image& image);
void save_png(const Image& image, const std::filesystem::path& path);

// Baseline JPEG encode at `quality` (1..100) and decode back.
Image jpeg_roundtrip(const Image& image, int quality);

}  // namespace layerwise::perturb

#endif  // LAYERWISE_PERTURB_IMAGE_IO_HPP_
