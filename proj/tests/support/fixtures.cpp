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

#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>

#include "layerwise/common.hpp"
#include "layerwise/perturb/image_io.hpp"
#include "layerwise/rng.hpp"

namespace layerwise::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  const std::string name = "layerwise-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                           std::to_string(rd());
  path_ = fs::temp_directory_path() / name;
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

backend::StoreHeader synthetic_header(const std::string& model, int layers, int dim) {
  backend::StoreHeader h;
  h.model_name = model;
  h.layers = layers;
  h.dim = dim;
  h.schedule_version = "ext8-v1";
  h.rng = "philox4x32-10/1";
  return h;
}

backend::EmbeddingStore planted_store(const PlantedOptions& o) {
  backend::EmbeddingStore store;
  store.header = synthetic_header("planted", o.layers, o.dim);
  const CounterRng rng(o.seed, RngStream::kGaussianNoise);
  const auto L = static_cast<std::uint64_t>(o.layers);
  const auto d = static_cast<std::uint64_t>(o.dim);
  const int n = 2 * o.per_class;
  for (int i = 0; i < n; ++i) {
    const Label label = i % 2 == 0 ? Label::kReal : Label::kGenerated;
    backend::StoreRecord orig{o.id_prefix + std::to_string(i), label, backend::Variant::kOriginal, {}};
    backend::StoreRecord pert{orig.id, label, backend::Variant::kPerturbed, {}};
    orig.values.resize(L * d);
    pert.values.resize(L * d);
    for (std::uint64_t l = 0; l < L; ++l) {
      const bool planted = static_cast<int>(l) + 1 == o.planted_layer;
      const double sigma = planted ? (label == Label::kReal ? o.sigma_real : o.sigma_fake) : o.sigma_off;
      for (std::uint64_t k = 0; k < d; ++k) {
        const std::uint64_t idx = (static_cast<std::uint64_t>(i) * L + l) * d + k;
        const double base = rng.normal(idx, 0);
        const double noise = rng.normal(idx, 1);
        orig.values[l * d + k] = static_cast<float>(base);
        pert.values[l * d + k] = static_cast<float>(base + sigma * noise);
      }
    }
    store.records.push_back(std::move(orig));
    store.records.push_back(std::move(pert));
  }
  return store;
}

backend::EmbeddingStore hunchback_store(const HunchbackOptions& o) {
  backend::EmbeddingStore store;
  store.header = synthetic_header("hunchback", o.layers, o.dim);
  const auto d = static_cast<std::size_t>(o.dim);
  const CounterRng basis_rng(o.seed, RngStream::kElasticX);
  const CounterRng point_rng(o.seed, RngStream::kElasticY);
  std::vector<std::vector<double>> bases;
  std::vector<int> dims;
  for (int l = 1; l <= o.layers; ++l) {
    const int k = std::min(l, o.layers - l + 1);
    dims.push_back(k);
    std::vector<double> a(d * static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = basis_rng.normal(static_cast<std::uint64_t>(l) * 100000 + j);
    bases.push_back(std::move(a));
  }
  for (int i = 0; i < o.points; ++i) {
    backend::StoreRecord r{"p" + std::to_string(i), i % 2 == 0 ? Label::kReal : Label::kGenerated,
                           backend::Variant::kOriginal, std::vector<float>(static_cast<std::size_t>(o.layers) * d)};
    for (int l = 0; l < o.layers; ++l) {
      const int k = dims[static_cast<std::size_t>(l)];
      std::vector<double> u(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j) {
        u[static_cast<std::size_t>(j)] =
            point_rng.uniform((static_cast<std::uint64_t>(i) * 64 + static_cast<std::uint64_t>(l)) * 16 + static_cast<std::uint64_t>(j));
      }
      for (std::size_t r_ = 0; r_ < d; ++r_) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += bases[static_cast<std::size_t>(l)][r_ * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)] * u[static_cast<std::size_t>(j)];
        r.values[static_cast<std::size_t>(l) * d + r_] = static_cast<float>(s);
      }
    }
    store.records.push_back(std::move(r));
  }
  return store;
}

backend::EmbeddingStore random_store(int layers, int dim, int images, std::uint64_t seed, bool both_variants) {
  backend::EmbeddingStore store;
  store.header = synthetic_header("random-" + std::to_string(seed), layers, dim);
  store.header.perturbation.seed = seed;
  store.header.extra["note"] = "fixture";
  const CounterRng rng(seed, RngStream::kShotNoise);
  const auto width = static_cast<std::size_t>(layers) * static_cast<std::size_t>(dim);
  std::uint64_t k = 0;
  for (int i = 0; i < images; ++i) {
    const Label label = rng.below(k++, 2) ? Label::kGenerated : Label::kReal;
    for (int v = 0; v < (both_variants ? 2 : 1); ++v) {
      backend::StoreRecord r{"id/" + std::to_string(i) + "-\xc3\xa9", label, static_cast<backend::Variant>(v),
                             std::vector<float>(width)};
      for (auto& x : r.values) x = static_cast<float>(rng.normal(k++) * 3.0);
      store.records.push_back(std::move(r));
    }
  }
  return store;
}

perturb::Image constant_image(int height, int width, float value) { return perturb::Image(height, width, value); }

perturb::Image gradient_image(int height, int width) {
  std::vector<float> v(static_cast<std::size_t>(height * width * 3));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>((y * width + x) * 3);
      v[i] = static_cast<float>(x) / static_cast<float>(std::max(1, width - 1));
      v[i + 1] = static_cast<float>(y) / static_cast<float>(std::max(1, height - 1));
      v[i + 2] = 0.5f * (v[i] + v[i + 1]);
    }
  }
  return perturb::Image(height, width, std::move(v));
}

perturb::Image checkerboard_image(int height, int width, int cell) {
  std::vector<float> v(static_cast<std::size_t>(height * width * 3));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const float c = ((y / cell + x / cell) % 2 == 0) ? 1.0f : 0.0f;
      for (int ch = 0; ch < 3; ++ch) v[static_cast<std::size_t>((y * width + x) * 3 + ch)] = c;
    }
  }
  return perturb::Image(height, width, std::move(v));
}

perturb::Image random_image(int height, int width, std::uint64_t seed) {
  const CounterRng rng(seed, RngStream::kImpulseNoise);
  std::vector<float> v(static_cast<std::size_t>(height * width * 3));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(rng.uniform(i));
  return perturb::Image(height, width, std::move(v));
}

perturb::Image natural_image(int height, int width, std::uint64_t seed) {
  const CounterRng rng(seed, RngStream::kImpulseNoise);
  struct Wave {
    double fy, fx, phase, amp;
  };
  std::vector<Wave> waves;
  for (std::uint64_t k = 0; k < 6; ++k) {
    waves.push_back({rng.uniform(4 * k) * 0.3, rng.uniform(4 * k + 1) * 0.3, rng.uniform(4 * k + 2) * 2 * std::numbers::pi,
                     0.08 + 0.1 * rng.uniform(4 * k + 3)});
  }
  std::vector<float> v(static_cast<std::size_t>(height * width * 3));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double s = 0.5;
        for (std::size_t k = 0; k < waves.size(); ++k) {
          const auto& w = waves[k];
          s += w.amp * std::sin(w.fy * y + w.fx * x + w.phase + c * 0.7 * static_cast<double>(k));
        }
        const std::size_t i = static_cast<std::size_t>((y * width + x) * 3 + c);
        s += 0.03 * (rng.uniform(1000 + i) - 0.5);
        v[i] = static_cast<float>(std::clamp(s, 0.0, 1.0));
      }
    }
  }
  return perturb::Image(height, width, std::move(v));
}

fs::path write_image_corpus(const fs::path& dir, int n_real, int n_fake, int size, std::uint64_t seed) {
  fs::create_directories(dir / "real");
  fs::create_directories(dir / "fake");
  std::string csv = "id,path,label,generator_tag\n";
  for (int i = 0; i < n_real + n_fake; ++i) {
    const bool fake = i >= n_real;
    const std::string id = (fake ? "fake_" : "real_") + std::to_string(i);
    const fs::path rel = fs::path(fake ? "fake" : "real") / (id + ".png");
    // Generated images get extra high-frequency texture.
    perturb::Image img = natural_image(size, size, seed + static_cast<std::uint64_t>(i));
    if (fake) {
      const auto noise = random_image(size, size, seed * 31 + static_cast<std::uint64_t>(i));
      std::vector<float> v(img.data().begin(), img.data().end());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.7f * v[k] + 0.3f * noise.data()[k];
      img = perturb::Image(size, size, std::move(v));
    }
    perturb::save_png(img, dir / rel);
    csv += id + "," + rel.generic_string() + "," + (fake ? "1" : "0") + "," + (fake ? "fixture-gen" : "") + "\n";
  }
  write_file(dir / "manifest.csv", csv);
  return dir / "manifest.csv";
}

}  // namespace layerwise::testing
