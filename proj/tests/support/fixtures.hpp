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

// Synthetic stores, images and scratch directories shared by the test suites.

#ifndef LAYERWISE_TESTS_SUPPORT_FIXTURES_HPP_
#define LAYERWISE_TESTS_SUPPORT_FIXTURES_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "layerwise/backend/store.hpp"
#include "layerwise/perturb/image.hpp"
#include "layerwise/score/score.hpp"

namespace layerwise::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Originals are i.i.d. standard normal rows; perturbed = original + sigma * noise.
// At the planted layer real and generated images get different sigmas, so
// only that layer separates the classes.
struct PlantedOptions {
  int layers = 12;
  int dim = 64;
  int per_class = 400;
  int planted_layer = 7;
  double sigma_real = 0.3;
  double sigma_fake = 0.52;
  double sigma_off = 0.4;
  std::uint64_t seed = 1;
  std::string id_prefix = "img";
};

backend::EmbeddingStore planted_store(const PlantedOptions& options = {});

// Layer l rows (originals only) lie on a random linear image of the unit cube
// of dimension min(l, L - l + 1): intrinsic dimension rises then falls.
struct HunchbackOptions {
  int layers = 12;
  int dim = 32;
  int points = 1000;
  std::uint64_t seed = 3;
};

backend::EmbeddingStore hunchback_store(const HunchbackOptions& options = {});

// Store with random contents, used by round-trip tests. `images` ids, each
// with one or both variants.
backend::EmbeddingStore random_store(int layers, int dim, int images, std::uint64_t seed, bool both_variants = true);

backend::StoreHeader synthetic_header(const std::string& model, int layers, int dim);

perturb::Image constant_image(int height, int width, float value);
perturb::Image gradient_image(int height, int width);
perturb::Image checkerboard_image(int height, int width, int cell);
perturb::Image random_image(int height, int width, std::uint64_t seed);
// Smooth, textured image: a few random sinusoids plus mild noise.
perturb::Image natural_image(int height, int width, std::uint64_t seed);

// Writes n_real + n_fake PNGs under dir/real and dir/fake and a manifest CSV;
// returns the manifest path.
std::filesystem::path write_image_corpus(const std::filesystem::path& dir, int n_real, int n_fake, int size,
                                         std::uint64_t seed = 11);

}  // namespace layerwise::testing

#endif  // LAYERWISE_TESTS_SUPPORT_FIXTURES_HPP_
