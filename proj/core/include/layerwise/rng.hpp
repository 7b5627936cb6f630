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

// Counter-based random numbers. Every stochastic operation in the toolkit
// draws from Philox4x32-10 keyed by a 64-bit seed, so a value depends only on
// (seed, stream, element index, draw) and never on evaluation order or thread
// count. The algorithm name and version are written into every store header.

#ifndef LAYERWISE_RNG_HPP_
#define LAYERWISE_RNG_HPP_

#include <array>
#include <cstdint>
#include <string_view>

namespace layerwise {

inline constexpr std::string_view kRngName = "philox4x32-10";
inline constexpr int kRngVersion = 1;

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

// Stream identifiers partition the counter space between purposes.
enum class RngStream : std::uint32_t {
  kSubsetSampling = 1,
  kGaussianNoise = 2,
  kShotNoise = 3,
  kImpulseNoise = 4,
  kElasticX = 5,
  kElasticY = 6,
  kIdSubsample = 7,
};

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngStream stream);

  PhiloxCounter block(std::uint64_t index, std::uint32_t draw = 0) const;

  // 53-bit uniform in [0, 1).
  double uniform(std::uint64_t index, std::uint32_t draw = 0) const;
  std::array<double, 2> uniform_pair(std::uint64_t index, std::uint32_t draw = 0) const;
  // Standard normal via Box-Muller on uniform_pair.
  double normal(std::uint64_t index, std::uint32_t draw = 0) const;
  // Integer in [0, bound) by multiply-shift of a 64-bit block.
  std::uint64_t below(std::uint64_t index, std::uint64_t bound) const;

 private:
  PhiloxKey key_;
  std::uint32_t stream_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Labeled derivation: root seed + purpose label -> independent child seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

}  // namespace layerwise

#endif  // LAYERWISE_RNG_HPP_
