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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "json.hpp"
#include "layerwise/backend/embedder.hpp"
#include "layerwise/backend/extract.hpp"
#include "layerwise/backend/model_spec.hpp"
#include "layerwise/backend/preprocess.hpp"
#include "layerwise/backend/store.hpp"
#include "layerwise/common.hpp"
#include "layerwise/corpus/manifest.hpp"
#include "layerwise/perturb/image_io.hpp"
#include "layerwise/rng.hpp"
#include "oracles.hpp"
#include "tiny_vit.hpp"

namespace layerwise::backend {
namespace {

namespace fs = std::filesystem;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected layerwise::Error";
  return ErrorCode::kInvalidArgument;
}

TEST(Preprocess, ResizeMatchesTriangleFilterOracle) {
  const perturb::Image img = testing::random_image(13, 9, 21);
  for (const auto& [h, w] : std::vector<std::pair<int, int>>{{13, 9}, {5, 7}, {30, 20}, {1, 1}, {16, 3}}) {
    const auto out = resize_bilinear(img, h, w);
    ASSERT_EQ(out.size(), static_cast<std::size_t>(h * w * 3));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          ASSERT_NEAR(out[static_cast<std::size_t>((y * w + x) * 3 + c)], testing::bilinear_oracle(img, h, w, y, x, c),
                      1e-12)
              << h << "x" << w << " at " << y << "," << x;
        }
      }
    }
  }
  EXPECT_THROW(resize_bilinear(img, 0, 3), Error);
}

TEST(Preprocess, NormalizesPlanarChannels) {
  ModelSpec spec;
  spec.input_size = 4;
  spec.mean = {0.5, 0.25, 0.0};
  spec.std = {0.5, 0.25, 2.0};
  const auto in = preprocess(testing::constant_image(8, 8, 0.75f), spec);
  ASSERT_EQ(in.size, 4);
  ASSERT_EQ(in.chw.size(), 48u);
  EXPECT_FLOAT_EQ(in.at(0, 1, 2), 0.5f);
  EXPECT_FLOAT_EQ(in.at(1, 3, 3), 2.0f);
  EXPECT_FLOAT_EQ(in.at(2, 0, 0), 0.375f);
}

TEST(ModelSpec, JsonRoundTripAndValidation) {
  testing::TempDir dir;
  testing::write_tiny_vit_package(dir.path());
  const ModelSpec spec = load_model_spec(dir.path());
  EXPECT_EQ(spec.name, "tiny-vit");
  EXPECT_EQ(spec.num_layers, 4);
  EXPECT_EQ(spec.graph_path, dir.path() / "model.onnx");
  const ModelSpec again = ModelSpec::from_json(spec.to_json(), dir.path());
  EXPECT_EQ(again.tap_names, spec.tap_names);
  EXPECT_EQ(again.graph_path, spec.graph_path);
  EXPECT_EQ(load_model_spec(dir / "model.json").name, spec.name);

  ModelSpec bad = spec;
  bad.tap_names.pop_back();
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kInvalidArgument);
  bad = spec;
  bad.tap_names[1] = bad.tap_names[0];
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { ModelSpec::from_json("{not json", {}); }), ErrorCode::kParse);
}

class TinyVit : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::write_tiny_vit_package(dir_.path(), config_);
    model_ = OnnxEmbedder::load(dir_.path());
  }
  testing::TempDir dir_;
  testing::TinyVitConfig config_;
  std::unique_ptr<OnnxEmbedder> model_;
};

TEST_F(TinyVit, ForwardPassMatchesDoublePrecisionReference) {
  const auto weights = testing::make_tiny_vit_weights(config_);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto image = testing::natural_image(20, 20, seed);
    const ModelInput input = preprocess(image, model_->spec());
    const LayerMatrix m = model_->embed_input(input);
    const auto ref = testing::tiny_vit_reference(config_, weights, input);
    ASSERT_EQ(m.layers, config_.layers);
    ASSERT_EQ(m.dim, config_.dim);
    for (int l = 0; l < m.layers; ++l) {
      for (int d = 0; d < m.dim; ++d) {
        const double r = ref[static_cast<std::size_t>(l)][static_cast<std::size_t>(d)];
        EXPECT_NEAR(m.row(l)[static_cast<std::size_t>(d)], r, 1e-4 * (1.0 + std::abs(r))) << "layer " << l + 1;
      }
    }
  }
}

TEST_F(TinyVit, SingleTapEqualsAllTapsExactly) {
  const ModelInput input = preprocess(testing::natural_image(16, 16, 7), model_->spec());
  RunStats all_stats;
  const LayerMatrix all = model_->embed_input(input, &all_stats);
  EXPECT_EQ(all_stats.nodes_executed, model_->graph().node_count() - 0) << "one pass executes the graph once";
  for (int l = 1; l <= config_.layers; ++l) {
    RunStats s;
    const auto row = model_->embed_layer(input, l, &s);
    const auto expect = all.row(l - 1);
    ASSERT_EQ(row, std::vector<float>(expect.begin(), expect.end())) << "layer " << l;
    if (l < config_.layers) {
      EXPECT_LT(s.nodes_executed, all_stats.nodes_executed);
    }
  }
  EXPECT_THROW(model_->embed_layer(input, 0), Error);
}

TEST_F(TinyVit, EmbeddingsAreNonDegenerateAndDeterministic) {
  const auto a = extract_all_layers(testing::natural_image(16, 16, 3), *model_);
  const auto b = extract_all_layers(testing::natural_image(16, 16, 3), *model_);
  const auto c = extract_all_layers(testing::natural_image(16, 16, 4), *model_);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_NO_THROW(validate_embeddings(a, config_.layers, config_.dim));
}

TEST_F(TinyVit, RejectsMismatchedPackages) {
  auto spec = model_->spec();
  spec.tap_names[2] = "no_such_value";
  EXPECT_EQ(code_of([&] { OnnxEmbedder(spec, OnnxGraph::load(spec.graph_path)); }), ErrorCode::kNotFound);
  spec = model_->spec();
  spec.input_name = "image";
  EXPECT_EQ(code_of([&] { OnnxEmbedder(spec, OnnxGraph::load(spec.graph_path)); }), ErrorCode::kNotFound);
  spec = model_->spec();
  spec.hidden_dim = 8;
  OnnxEmbedder wrong_dim(spec, OnnxGraph::load(spec.graph_path));
  EXPECT_EQ(code_of([&] { wrong_dim.embed(testing::natural_image(16, 16, 1)); }), ErrorCode::kExtraction);
  EXPECT_EQ(code_of([&] { OnnxEmbedder::load(dir_.path() / "missing"); }), ErrorCode::kNotFound);
}

TEST(ValidateEmbeddings, RejectsZeroRowsAndNonFinite) {
  LayerMatrix m(2, 3);
  m.row(0)[0] = 1.0f;
  EXPECT_EQ(code_of([&] { validate_embeddings(m, 2, 3); }), ErrorCode::kExtraction);
  m.row(1)[2] = NAN;
  EXPECT_EQ(code_of([&] { validate_embeddings(m, 2, 3); }), ErrorCode::kExtraction);
  m.row(1)[2] = 1.0f;
  EXPECT_NO_THROW(validate_embeddings(m, 2, 3));
  EXPECT_EQ(code_of([&] { validate_embeddings(m, 3, 2); }), ErrorCode::kExtraction);
}

TEST(Store, RoundTripIsBitExactOnRandomStores) {
  const CounterRng gen(77, RngStream::kSubsetSampling);
  std::uint64_t k = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int layers = 1 + static_cast<int>(gen.below(k++, 6));
    const int dim = 1 + static_cast<int>(gen.below(k++, 20));
    const int images = static_cast<int>(gen.below(k++, 12));
    EmbeddingStore store = testing::random_store(layers, dim, images, static_cast<std::uint64_t>(trial),
                                                 gen.below(k++, 2) == 0);
    // Special float payloads survive bit-exactly.
    if (!store.records.empty()) {
      store.records[0].values[0] = -0.0f;
      store.records[0].values.back() = std::numeric_limits<float>::denorm_min();
    }
    const std::string bytes = serialize_store(store);
    const EmbeddingStore back = parse_store(bytes);
    ASSERT_EQ(back, store);
    ASSERT_EQ(serialize_store(back), bytes);
    if (!store.records.empty()) {
      EXPECT_TRUE(std::signbit(back.records[0].values[0]));
    }
  }
}

TEST(Store, EmptyAndSingleRecordStores) {
  testing::TempDir dir;
  EmbeddingStore empty;
  empty.header = testing::synthetic_header("m", 2, 3);
  store_write(empty, dir / "empty.mleb");
  EXPECT_EQ(store_read(dir / "empty.mleb"), empty);

  EmbeddingStore one = empty;
  one.records.push_back({"only", Label::kGenerated, Variant::kPerturbed, {1, 2, 3, 4, 5, 6}});
  store_write(one, dir / "one.mleb");
  EXPECT_EQ(store_read(dir / "one.mleb"), one);
}

TEST(Store, LayoutFollowsFormatV1) {
  EmbeddingStore s;
  s.header = testing::synthetic_header("m", 1, 2);
  s.records.push_back({"ab", Label::kGenerated, Variant::kPerturbed, {1.0f, -2.0f}});
  const std::string bytes = serialize_store(s);
  EXPECT_EQ(bytes.substr(0, 4), "MLEB");
  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)]);
    return v;
  };
  EXPECT_EQ(u32(4), 1u);
  const std::uint32_t hlen = u32(8);
  const auto header = nlohmann::json::parse(bytes.substr(12, hlen));
  EXPECT_EQ(header["model"], "m");
  std::size_t at = 12 + hlen;
  EXPECT_EQ(u32(at), 1u);
  EXPECT_EQ(u32(at + 4), 0u);
  at += 8;
  EXPECT_EQ(static_cast<unsigned char>(bytes[at]), 2u);
  EXPECT_EQ(bytes.substr(at + 2, 2), "ab");
  EXPECT_EQ(bytes[at + 4], 1);
  EXPECT_EQ(bytes[at + 5], 1);
  EXPECT_EQ(u32(at + 6), 0x3f800000u);
  EXPECT_EQ(u32(at + 10), 0xc0000000u);
  EXPECT_EQ(bytes.size(), at + 14 + 4);
}

TEST(Store, CorruptionIsDetected) {
  const EmbeddingStore store = testing::random_store(3, 5, 4, 9);
  const std::string bytes = serialize_store(store);
  for (std::size_t pos = 0; pos < bytes.size(); pos += 7) {
    std::string bad = bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x10);
    EXPECT_EQ(code_of([&] { parse_store(bad); }), ErrorCode::kCorrupt) << "flip at " << pos;
  }
  for (std::size_t len : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    EXPECT_EQ(code_of([&] { parse_store(bytes.substr(0, len)); }), ErrorCode::kCorrupt) << "truncated to " << len;
  }
  EXPECT_EQ(code_of([&] { parse_store(bytes + "x"); }), ErrorCode::kCorrupt);
}

TEST(Store, ValidationRejectsBadStores) {
  EmbeddingStore s = testing::random_store(2, 2, 2, 1);
  s.records[0].values.pop_back();
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::kInvalidArgument);
  s = testing::random_store(2, 2, 2, 1);
  s.records.push_back(s.records[0]);
  EXPECT_EQ(code_of([&] { serialize_store(s); }), ErrorCode::kInvalidArgument);
  s = testing::random_store(2, 2, 2, 1);
  s.records[1].label = s.records[0].label == Label::kReal ? Label::kGenerated : Label::kReal;
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(Store, ShardDirectoryRoundTrips) {
  testing::TempDir dir;
  const EmbeddingStore store = testing::random_store(2, 4, 13, 5);
  store_write_shards(store, dir / "shards");
  EXPECT_EQ(store_read(dir / "shards"), store);
  EXPECT_EQ(code_of([&] { store_read(dir / "nothing"); }), ErrorCode::kNotFound);
  fs::create_directories(dir / "emptydir");
  EXPECT_EQ(code_of([&] { store_read(dir / "emptydir"); }), ErrorCode::kNotFound);
}

TEST(Store, FindAndCount) {
  const EmbeddingStore store = testing::random_store(2, 3, 5, 2, true);
  EXPECT_EQ(store.count(Variant::kOriginal), 5u);
  const auto* r = store.find(store.records[3].id, Variant::kPerturbed);
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(store.matrix(*r).values, r->values);
  EXPECT_EQ(store.find("nope", Variant::kOriginal), nullptr);
}

class Extraction : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::write_tiny_vit_package(dir_ / "model");
    model_ = OnnxEmbedder::load(dir_ / "model");
    manifest_path_ = testing::write_image_corpus(dir_ / "images", 4, 4, 24);
  }
  testing::TempDir dir_;
  std::unique_ptr<OnnxEmbedder> model_;
  fs::path manifest_path_;
};

TEST_F(Extraction, ProducesOrderedPairsIndependentOfThreads) {
  const auto manifest = corpus::load_manifest(manifest_path_);
  ExtractOptions one;
  one.threads = 1;
  one.perturbation = {perturb::PerturbationKind::kGaussianNoise, 3, 17};
  ExtractOptions many = one;
  many.threads = 4;
  const auto a = extract_dataset(manifest, *model_, one);
  const auto b = extract_dataset(manifest, *model_, many);
  EXPECT_EQ(a.store, b.store);
  ASSERT_EQ(a.store.records.size(), 16u);
  EXPECT_TRUE(a.failures.empty());
  EXPECT_EQ(a.attempted, 8u);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& rec = manifest.records()[i];
    EXPECT_EQ(a.store.records[2 * i].id, rec.id);
    EXPECT_EQ(a.store.records[2 * i].variant, Variant::kOriginal);
    EXPECT_EQ(a.store.records[2 * i + 1].variant, Variant::kPerturbed);
    EXPECT_EQ(a.store.records[2 * i].label, rec.label);
  }
  EXPECT_EQ(a.store.header.perturbation, one.perturbation);
  EXPECT_EQ(a.store.header.model_name, "tiny-vit");
  EXPECT_EQ(a.store.header.perturbation_order, "perturb-then-resize");
  EXPECT_EQ(a.store.header.schedule_version, "ext8-v1");
}

TEST_F(Extraction, PerturbedRecordIsModelOfPerturbedNativeImage) {
  const auto manifest = corpus::load_manifest(manifest_path_);
  ExtractOptions opt;
  opt.threads = 1;
  opt.perturbation = {perturb::PerturbationKind::kShotNoise, 5, 3};
  const auto r = extract_dataset(manifest, *model_, opt);
  const auto& rec = manifest.records()[2];
  const auto image = perturb::load_image(rec.path);
  const auto spec = per_image_spec(opt.perturbation, rec.id);
  EXPECT_EQ(spec.seed, derive_seed(3, rec.id));
  const auto expect_orig = extract_all_layers(image, *model_);
  const auto expect_pert = extract_all_layers(perturb::apply(image, spec), *model_);
  EXPECT_EQ(r.store.find(rec.id, Variant::kOriginal)->values, expect_orig.values);
  EXPECT_EQ(r.store.find(rec.id, Variant::kPerturbed)->values, expect_pert.values);
}

TEST_F(Extraction, FailuresAreSalvagedOrRaised) {
  fs::remove(dir_ / "images" / "real" / "real_1.png");
  write_file(dir_ / "images" / "fake" / "fake_5.png", "not a png");
  const auto manifest = corpus::load_manifest(manifest_path_);
  ExtractOptions strict;
  strict.threads = 2;
  EXPECT_EQ(code_of([&] { extract_dataset(manifest, *model_, strict); }), ErrorCode::kExtraction);
  ExtractOptions salvage = strict;
  salvage.salvage = true;
  const auto r = extract_dataset(manifest, *model_, salvage);
  ASSERT_EQ(r.failures.size(), 2u);
  EXPECT_EQ(r.failures[0].id, "real_1");
  EXPECT_EQ(r.failures[1].id, "fake_5");
  EXPECT_EQ(r.store.records.size(), 12u);
  EXPECT_DOUBLE_EQ(r.failure_fraction(), 0.25);
  EXPECT_NO_THROW(enforce_failure_budget(r, 0.25));
  EXPECT_EQ(code_of([&] { enforce_failure_budget(r, 0.2); }), ErrorCode::kBudgetExceeded);
  const std::string csv = failure_report_csv(r.failures);
  EXPECT_NE(csv.find("real_1"), std::string::npos);
}

TEST_F(Extraction, PairExtractorMatchesFullExtraction) {
  const auto manifest = corpus::load_manifest(manifest_path_);
  ExtractOptions opt;
  opt.threads = 2;
  const PairExtractor pairs(manifest, *model_, opt);
  for (const perturb::PerturbationSpec spec :
       {perturb::PerturbationSpec{perturb::PerturbationKind::kDefocusBlur, 2, 0},
        perturb::PerturbationSpec{perturb::PerturbationKind::kImpulseNoise, 4, 8}}) {
    ExtractOptions o = opt;
    o.perturbation = spec;
    EXPECT_EQ(pairs.extract(spec).store, extract_dataset(manifest, *model_, o).store);
  }
}

TEST_F(Extraction, CustomLoaderIsUsed) {
  const auto manifest = corpus::load_manifest(manifest_path_);
  ExtractOptions opt;
  opt.threads = 1;
  opt.loader = [](const corpus::ImageRecord& r) {
    return testing::natural_image(16, 16, r.label == Label::kReal ? 1 : 2);
  };
  const auto res = extract_dataset(manifest, *model_, opt);
  EXPECT_EQ(res.store.records[0].values, res.store.records[2].values);
}

}  // namespace
}  // namespace layerwise::backend
