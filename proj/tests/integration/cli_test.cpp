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

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "json.hpp"
#include "layerwise/backend/store.hpp"
#include "layerwise/common.hpp"
#include "layerwise/rng.hpp"
#include "layerwise/metrics/metrics.hpp"
#include "layerwise/score/score.hpp"
#include "layerwise/search/detector_config.hpp"
#include "layerwise/search/search.hpp"
#include "tiny_vit.hpp"

namespace layerwise::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "layerwise");
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& l : split(text, '\n')) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

std::vector<json> jsonl(const fs::path& p) {
  std::vector<json> out;
  for (const auto& l : lines(read_file(p))) out.push_back(json::parse(l));
  return out;
}

// Every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  }
  return out;
}

class PlantedCli : public ::testing::Test {
 protected:
  void SetUp() override {
    store_ = testing::planted_store({.per_class = 200});
    store_path_ = dir_ / "planted.mleb";
    backend::store_write(store_, store_path_);
  }

  std::string out(const std::string& name) const { return (dir_ / name).string(); }

  testing::TempDir dir_;
  backend::EmbeddingStore store_;
  fs::path store_path_;
};

TEST_F(PlantedCli, SearchFindsThePlantedLayerAndRecordsProvenance) {
  const CliRun r = run({"search", "--store", store_path_.string(), "--out-dir", out("s"), "--seed", "5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("optimal_layer=7 "), std::string::npos) << r.out;
  const auto cfg = search::load_detector_config(dir_ / "s" / "detector.json");
  EXPECT_EQ(cfg.optimal_layer, 7);
  EXPECT_EQ(cfg.model_name, "planted");
  EXPECT_EQ(cfg.provenance.fraction_percent, 30.0);
  EXPECT_EQ(cfg.provenance.subset_seed, derive_seed(5, "subset"));
  EXPECT_EQ(cfg.provenance.subset_size, 120u);
  EXPECT_EQ(cfg.provenance.search_space, "layers=1-12;kinds=defocus_blur;severities=7");

  const auto surface = lines(read_file(dir_ / "s" / "surface.csv"));
  ASSERT_EQ(surface.size(), 14u);
  EXPECT_EQ(surface[0].rfind("# layerwise ", 0), 0u);
  const auto per_layer = lines(read_file(dir_ / "s" / "layer_auroc.csv"));
  ASSERT_EQ(per_layer.size(), 14u);
  EXPECT_EQ(per_layer[1], "layer,auroc,ap");

  // The layers-only CLI search reproduces search_layer on the same subset.
  const auto subset = json::parse(read_file(dir_ / "s" / "subset.json"));
  const auto ids = subset["ids"].get<std::vector<std::string>>();
  const auto sub_matrix = score::score_store(search::restrict_store(store_, ids)).matrix;
  const auto direct = search::search_layer(sub_matrix);
  EXPECT_EQ(direct.best_layer, 7);
  EXPECT_EQ(cfg.provenance.search_auroc, direct.auroc[6]);
  for (std::size_t l = 0; l < 12; ++l) {
    EXPECT_EQ(split(per_layer[l + 2], ',')[1], format_double(direct.auroc[l]));
  }
}

TEST_F(PlantedCli, DetectOnTheSearchSubsetReproducesTheSearchAuroc) {
  ASSERT_EQ(run({"search", "--store", store_path_.string(), "--out-dir", out("s"), "--seed", "2"}).code, kExitOk);
  const auto subset = json::parse(read_file(dir_ / "s" / "subset.json"));
  const auto sub = search::restrict_store(store_, subset["ids"].get<std::vector<std::string>>());
  backend::store_write(sub, dir_ / "subset.mleb");
  const CliRun d = run({"detect", "--detector", out("s/detector.json"), "--store", out("subset.mleb"), "--out-dir",
                     out("d")});
  ASSERT_EQ(d.code, kExitOk) << d.err;
  const auto det = jsonl(dir_ / "d" / "detections.jsonl");
  ASSERT_EQ(det.size(), sub.records.size() / 2);
  std::vector<double> sims;
  std::vector<Label> labels;
  const auto rows = score::score_store(sub).matrix.rows;
  for (std::size_t i = 0; i < det.size(); ++i) {
    EXPECT_EQ(det[i]["id"], rows[i].id);
    sims.push_back(det[i]["similarity"].get<double>());
    labels.push_back(rows[i].label);
  }
  const auto cfg = search::load_detector_config(dir_ / "s" / "detector.json");
  EXPECT_EQ(metrics::auroc(metrics::from_similarities(sims, labels)), cfg.provenance.search_auroc);
}

TEST_F(PlantedCli, SimilarityEqualToTauIsReal) {
  const auto rows = score::score_store(store_).matrix.rows;
  search::DetectorConfig cfg;
  cfg.model_name = store_.header.model_name;
  cfg.num_layers = 12;
  cfg.hidden_dim = 64;
  cfg.perturbation = store_.header.perturbation;
  cfg.optimal_layer = 7;
  cfg.provenance.schedule_version = store_.header.schedule_version;
  const double tau = rows[5].similarities[6];
  cfg.threshold.tau = tau;
  search::save_detector_config(cfg, dir_ / "tau.json");
  const CliRun d = run({"detect", "--detector", out("tau.json"), "--store", store_path_.string(), "--out-dir", out("d")});
  ASSERT_EQ(d.code, kExitOk) << d.err;
  const auto det = jsonl(dir_ / "d" / "detections.jsonl");
  ASSERT_EQ(det.size(), rows.size());
  EXPECT_EQ(det[5]["id"], rows[5].id);
  EXPECT_EQ(det[5]["similarity"].get<double>(), tau);
  EXPECT_EQ(det[5]["label"], 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(det[i]["label"], rows[i].similarities[6] < tau ? 1 : 0);
  }
  EXPECT_EQ(lines(d.out).size(), rows.size());

  cfg.threshold.tau = std::nextafter(tau, 2.0);
  search::save_detector_config(cfg, dir_ / "above.json");
  ASSERT_EQ(run({"detect", "--detector", out("above.json"), "--store", store_path_.string(), "--out-dir", out("a")}).code,
            kExitOk);
  EXPECT_EQ(jsonl(dir_ / "a" / "detections.jsonl")[5]["label"], 1);
}

TEST_F(PlantedCli, EvalOutputsAndCrossChecks) {
  ASSERT_EQ(run({"search", "--store", store_path_.string(), "--out-dir", out("s")}).code, kExitOk);
  const CliRun e = run({"eval", "--store", store_path_.string(), "--detector", out("s/detector.json"), "--out-dir",
                     out("e"), "--bins", "10"});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  const fs::path dir = dir_ / "e";
  const auto m = json::parse(read_file(dir / "metrics.json"));
  ASSERT_EQ(m["per_layer"].size(), 12u);
  EXPECT_EQ(m["optimal_layer"], 7);
  EXPECT_GE(m["per_layer"][6]["auroc"].get<double>(), m["per_layer"][11]["auroc"].get<double>());
  EXPECT_GT(m["rates"]["accuracy"].get<double>(), 0.9);
  EXPECT_EQ(m["n_images"], 400);
  EXPECT_EQ(lines(read_file(dir / "layer_metrics.csv")).size(), 14u);
  EXPECT_EQ(lines(read_file(dir / "mean_profile.csv")).size(), 14u);
  for (int l = 1; l <= 12; ++l) {
    char name[32];
    std::snprintf(name, sizeof(name), "layer_%02d.csv", l);
    EXPECT_EQ(lines(read_file(dir / "histograms" / name)).size(), 12u) << name;
  }
  EXPECT_EQ(lines(read_file(dir / "roc.csv"))[1], "fpr,tpr,threshold");
  EXPECT_EQ(lines(read_file(dir / "pr.csv"))[1], "recall,precision,threshold");

  // detect's similarity equals eval's stored score at the optimal layer.
  ASSERT_EQ(run({"detect", "--detector", out("s/detector.json"), "--store", store_path_.string(), "--out-dir",
                 out("d")}).code,
            kExitOk);
  const auto det = jsonl(dir_ / "d" / "detections.jsonl");
  const auto scores = lines(read_file(dir / "scores.csv"));
  ASSERT_EQ(scores.size(), det.size() + 2);
  for (std::size_t i = 0; i < det.size(); ++i) {
    const auto fields = split(scores[i + 2], ',');
    EXPECT_EQ(fields[0], det[i]["id"].get<std::string>());
    EXPECT_EQ(std::stod(fields[2 + 6]), det[i]["similarity"].get<double>());
  }
}

TEST_F(PlantedCli, RerunsAreByteIdenticalAndCarryTheBanner) {
  for (const char* o : {"x1", "x2"}) {
    ASSERT_EQ(run({"search", "--store", store_path_.string(), "--out-dir", out(o), "--seed", "9"}).code, kExitOk);
    ASSERT_EQ(run({"eval", "--store", store_path_.string(), "--out-dir", out(o)}).code, kExitOk);
    ASSERT_EQ(run({"id", "--store", store_path_.string(), "--out-dir", out(o), "--sample-cap", "150"}).code, kExitOk);
    // The detector path is part of the digest, so both runs read the same file.
    ASSERT_EQ(run({"detect", "--store", store_path_.string(), "--detector", out("x1/detector.json"),
                   "--out-dir", out(o)}).code,
              kExitOk);
  }
  const auto a = tree(dir_ / "x1");
  const auto b = tree(dir_ / "x2");
  EXPECT_EQ(a, b);
  EXPECT_GT(a.size(), 15u);
  for (const auto& [name, body] : a) {
    if (name.ends_with(".csv")) {
      EXPECT_EQ(body.rfind("# layerwise " + std::string(kToolkitVersion) + " config_digest=", 0), 0u) << name;
    } else if (name.ends_with(".jsonl")) {
      for (const auto& l : lines(body)) {
        const auto j = json::parse(l);
        EXPECT_EQ(j["toolkit_version"], kToolkitVersion);
        EXPECT_TRUE(j.contains("config_digest"));
      }
    } else {
      auto j = json::parse(body);
      if (name == "detector.json") j = j["provenance"];
      EXPECT_EQ(j["toolkit_version"], kToolkitVersion) << name;
      EXPECT_TRUE(j.contains("config_digest")) << name;
    }
  }
  // A different seed changes the digest.
  ASSERT_EQ(run({"search", "--store", store_path_.string(), "--out-dir", out("x3"), "--seed", "10"}).code, kExitOk);
  EXPECT_NE(lines(tree(dir_ / "x3")["surface.csv"])[0], lines(a.at("surface.csv"))[0]);
}

TEST_F(PlantedCli, ConfigFilePrecedence) {
  write_file(dir_ / "run.cfg", "# search settings\nfraction = 50\nseed = 4\nthreshold=fixed_fpr(0.1)\n");
  const CliRun r = run({"search", "--config", out("run.cfg"), "--store", store_path_.string(), "--fraction", "20",
                     "--out-dir", out("c")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto cfg = search::load_detector_config(dir_ / "c" / "detector.json");
  EXPECT_EQ(cfg.provenance.fraction_percent, 20.0);
  EXPECT_EQ(cfg.provenance.subset_seed, derive_seed(4, "subset"));
  EXPECT_EQ(cfg.threshold.policy, "fixed_fpr(0.1)");
  EXPECT_EQ(cfg.provenance.subset_size, 80u);
  write_file(dir_ / "bad.cfg", "fractoin = 50\n");
  EXPECT_EQ(run({"search", "--config", out("bad.cfg"), "--store", store_path_.string(), "--out-dir", out("b")}).code,
            kExitUsage);
}

TEST_F(PlantedCli, ExitCodes) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"search", "--store", store_path_.string(), "--no-such-flag", "1"}).code, kExitUsage);
  EXPECT_EQ(run({"search", "--store", store_path_.string(), "--fraction", "0", "--out-dir", out("u")}).code, kExitUsage);
  EXPECT_EQ(run({"search", "--store", store_path_.string(), "--layers", "0-3", "--out-dir", out("u")}).code, kExitUsage);
  EXPECT_EQ(run({"search", "--store", store_path_.string(), "--threshold", "median", "--out-dir", out("u")}).code,
            kExitUsage);
  EXPECT_EQ(run({"id", "--store", store_path_.string(), "--id-fit", "pca", "--out-dir", out("u")}).code, kExitUsage);
  EXPECT_EQ(run({"detect", "--store", store_path_.string(), "--out-dir", out("u")}).code, kExitUsage);

  const CliRun missing = run({"eval", "--store", out("nope.mleb"), "--out-dir", out("u")});
  EXPECT_EQ(missing.code, kExitData);
  EXPECT_NE(missing.err.find("not found"), std::string::npos) << missing.err;
  std::string bytes = read_file(store_path_);
  bytes[bytes.size() / 2] ^= 0x20;
  write_file(dir_ / "corrupt.mleb", bytes);
  const CliRun corrupt = run({"eval", "--store", out("corrupt.mleb"), "--out-dir", out("u")});
  EXPECT_EQ(corrupt.code, kExitData);
  EXPECT_EQ(run({"detect", "--detector", store_path_.string(), "--store", store_path_.string(), "--out-dir",
                 out("u")}).code,
            kExitData);

  // A detector for another model is rejected against this store.
  ASSERT_EQ(run({"search", "--store", store_path_.string(), "--out-dir", out("s")}).code, kExitOk);
  auto cfg = search::load_detector_config(dir_ / "s" / "detector.json");
  cfg.model_name = "other";
  search::save_detector_config(cfg, dir_ / "other.json");
  EXPECT_EQ(run({"detect", "--detector", out("other.json"), "--store", store_path_.string(), "--out-dir", out("u")}).code,
            kExitData);
  EXPECT_EQ(run({"--version"}).code, kExitOk);
}

TEST(HunchbackCli, IdProfileRisesThenFalls) {
  testing::TempDir dir;
  backend::store_write(testing::hunchback_store(), dir / "h.mleb");
  const CliRun r = run({"id", "--store", (dir / "h.mleb").string(), "--out-dir", (dir / "o").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(read_file(dir / "o" / "id_profile.csv"));
  ASSERT_EQ(rows.size(), 14u);
  std::vector<double> ids;
  for (std::size_t i = 2; i < rows.size(); ++i) ids.push_back(std::stod(split(rows[i], ',')[1]));
  const auto peak = std::max_element(ids.begin(), ids.end()) - ids.begin();
  EXPECT_GE(peak, 4);
  EXPECT_LE(peak, 7);
  EXPECT_LT(ids.front(), ids[static_cast<std::size_t>(peak)]);
  EXPECT_LT(ids.back(), ids[static_cast<std::size_t>(peak)]);
}

class ImageCli : public ::testing::Test {
 protected:
  void SetUp() override {
    model_ = testing::write_tiny_vit_package(dir_ / "model").string();
    manifest_ = testing::write_image_corpus(dir_ / "images", 6, 6, 24).string();
  }
  std::string out(const std::string& name) const { return (dir_ / name).string(); }

  testing::TempDir dir_;
  std::string model_;
  std::string manifest_;
};

TEST_F(ImageCli, ExtractWritesAPairPerImageAndEchoesTheConfig) {
  const CliRun r = run({"extract", "--model", model_, "--manifest", manifest_, "--kind", "gaussian_noise", "--severity",
                     "5", "--seed", "3", "--out-dir", out("x"), "--threads", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto store = backend::store_read(dir_ / "x" / "embeddings.mleb");
  EXPECT_EQ(store.records.size(), 24u);
  EXPECT_EQ(store.header.layers, 4);
  EXPECT_EQ(store.header.dim, 16);
  EXPECT_EQ(store.header.perturbation.severity, 5);
  EXPECT_EQ(store.header.perturbation.seed, derive_seed(3, "perturbation"));
  EXPECT_EQ(store.header.extra.at("config.kind"), "gaussian_noise");
  EXPECT_TRUE(store.header.extra.contains("config_digest"));

  // Thread count does not change the store.
  ASSERT_EQ(run({"extract", "--model", model_, "--manifest", manifest_, "--kind", "gaussian_noise", "--severity", "5",
                 "--seed", "3", "--out-dir", out("y"), "--threads", "1"}).code,
            kExitOk);
  EXPECT_EQ(read_file(dir_ / "x" / "embeddings.mleb"), read_file(dir_ / "y" / "embeddings.mleb"));

  // Manifest-mode detect matches the store's scores for the same images.
  const auto m = score::score_store(store).matrix;
  search::DetectorConfig cfg;
  cfg.model_name = "tiny-vit";
  cfg.num_layers = 4;
  cfg.hidden_dim = 16;
  cfg.perturbation = store.header.perturbation;
  cfg.optimal_layer = 2;
  cfg.threshold.tau = 0.9;
  cfg.provenance.schedule_version = store.header.schedule_version;
  search::save_detector_config(cfg, dir_ / "det.json");
  const CliRun d = run({"detect", "--detector", out("det.json"), "--model", model_, "--manifest", manifest_, "--out-dir",
                     out("d"), "--threads", "3"});
  ASSERT_EQ(d.code, kExitOk) << d.err;
  const auto det = jsonl(dir_ / "d" / "detections.jsonl");
  ASSERT_EQ(det.size(), 12u);
  for (std::size_t i = 0; i < det.size(); ++i) {
    EXPECT_EQ(det[i]["id"], m.rows[i].id);
    EXPECT_EQ(det[i]["similarity"].get<double>(), m.rows[i].similarities[1]);
  }
  const CliRun one = run({"detect", "--detector", out("det.json"), "--model", model_, "--image",
                       (dir_ / "images" / "real" / "real_0.png").string(), "--id", "real_0", "--out-dir",
                       out("one")});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  const auto j = json::parse(lines(one.out).at(0));
  EXPECT_EQ(j["id"], "real_0");
  EXPECT_EQ(j["similarity"].get<double>(), m.rows[0].similarities[1]);
}

TEST_F(ImageCli, ExtractionSearchOverAJointSpace) {
  const CliRun r = run({"search", "--model", model_, "--manifest", manifest_, "--kinds", "contrast,defocus_blur",
                     "--severities", "2,6", "--fraction", "100", "--out-dir", out("j")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto surface = lines(read_file(dir_ / "j" / "surface.csv"));
  EXPECT_EQ(surface.size(), 2u + 2 * 2 * 4);
  const auto cfg = search::load_detector_config(dir_ / "j" / "detector.json");
  EXPECT_EQ(cfg.provenance.subset_size, 12u);
  EXPECT_EQ(cfg.provenance.search_space, "layers=1-4;kinds=contrast,defocus_blur;severities=2,6");
  double best = 0.0;
  for (std::size_t i = 2; i < surface.size(); ++i) best = std::max(best, std::stod(split(surface[i], ',')[3]));
  EXPECT_EQ(cfg.provenance.search_auroc, best);
}

TEST_F(ImageCli, FailureBudget) {
  write_file(dir_ / "images" / "broken.png", "not an image");
  std::string csv = read_file(manifest_);
  csv += "broken,broken.png,1,\n";
  write_file(dir_ / "images" / "with_broken.csv", csv);
  const std::string m = out("images/with_broken.csv");
  const CliRun over = run({"extract", "--model", model_, "--manifest", m, "--out-dir", out("f")});
  EXPECT_EQ(over.code, kExitBudget) << over.err;
  EXPECT_NE(over.err.find("broken"), std::string::npos);
  EXPECT_NE(read_file(dir_ / "f" / "failures.csv").find("broken"), std::string::npos);
  const CliRun within = run({"extract", "--model", model_, "--manifest", m, "--max-failure-fraction", "0.1", "--out-dir",
                          out("g")});
  EXPECT_EQ(within.code, kExitOk) << within.err;
  EXPECT_EQ(backend::store_read(dir_ / "g" / "embeddings.mleb").records.size(), 24u);
  EXPECT_EQ(run({"extract", "--model", out("missing"), "--manifest", m, "--out-dir", out("h")}).code, kExitData);
}

}  // namespace
}  // namespace layerwise::cli
