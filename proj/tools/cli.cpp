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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"
#include "layerwise/backend/embedder.hpp"
#include "layerwise/backend/extract.hpp"
#include "layerwise/backend/store.hpp"
#include "layerwise/common.hpp"
#include "layerwise/corpus/manifest.hpp"
#include "layerwise/corpus/sampling.hpp"
#include "layerwise/intdim/twonn.hpp"
#include "layerwise/metrics/metrics.hpp"
#include "layerwise/parallel.hpp"
#include "layerwise/perturb/image_io.hpp"
#include "layerwise/perturb/perturb.hpp"
#include "layerwise/rng.hpp"
#include "layerwise/score/score.hpp"
#include "layerwise/search/detector_config.hpp"
#include "layerwise/search/search.hpp"
#include "run_config.hpp"

namespace layerwise::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Converts a library argument error raised while reading a flag into a usage error.
template <typename Fn>
auto as_usage(std::string_view key, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw UsageError("--" + std::string(key) + ": " + e.what());
  }
}

class Outputs {
 public:
  Outputs(fs::path dir, std::string digest) : dir_(std::move(dir)), digest_(std::move(digest)) {}

  const std::string& digest() const { return digest_; }
  fs::path path(const std::string& name) const { return dir_ / name; }

  std::string banner() const {
    return "# layerwise " + std::string(kToolkitVersion) + " config_digest=" + digest_ + "\n";
  }

  fs::path csv(const std::string& name, const std::string& body) const {
    const fs::path p = path(name);
    write_file(p, banner() + body);
    return p;
  }

  fs::path json(const std::string& name, ordered_json j) const {
    j["toolkit_version"] = std::string(kToolkitVersion);
    j["config_digest"] = digest_;
    const fs::path p = path(name);
    write_file(p, j.dump(2) + "\n");
    return p;
  }

 private:
  fs::path dir_;
  std::string digest_;
};

struct Context {
  const RunConfig& config;
  const Outputs& outputs;
  std::ostream& out;
  std::ostream& err;
  unsigned threads = 0;
};

const perturb::SeveritySchedule& schedule_for(const RunConfig& c, std::optional<perturb::SeveritySchedule>& storage) {
  if (c.get("schedule").empty()) return perturb::SeveritySchedule::builtin();
  storage = perturb::SeveritySchedule::load(c.require_path("schedule"));
  storage->validate();
  return *storage;
}

perturb::PerturbationSpec perturbation_for(const RunConfig& c) {
  perturb::PerturbationSpec spec;
  spec.kind = as_usage("kind", [&] { return perturb::parse_kind(c.get("kind")); });
  spec.severity = c.get_int("severity");
  spec.seed = derive_seed(c.get_u64("seed"), "perturbation");
  as_usage("severity", [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

void check_store_matches(const backend::StoreHeader& h, const search::DetectorConfig& cfg) {
  if (h.model_name != cfg.model_name || h.layers != cfg.num_layers || h.dim != cfg.hidden_dim) {
    fail(ErrorCode::kInvalidArgument, "store model '" + h.model_name + "' does not match detector model '" +
                                          cfg.model_name + "'");
  }
  if (h.schedule_version != cfg.provenance.schedule_version) {
    fail(ErrorCode::kInvalidArgument, "store severity schedule '" + h.schedule_version +
                                          "' does not match detector schedule '" + cfg.provenance.schedule_version + "'");
  }
  if (!(h.perturbation == cfg.perturbation)) {
    fail(ErrorCode::kInvalidArgument, "store perturbation " + h.perturbation.describe() +
                                          " does not match detector perturbation " + cfg.perturbation.describe());
  }
}

corpus::Manifest manifest_from_scores(const score::ScoreMatrix& m, const std::string& name) {
  if (m.rows.empty()) fail(ErrorCode::kInvalidArgument, "store has no image with both variants");
  std::vector<corpus::ImageRecord> records;
  for (const auto& r : m.rows) records.push_back({r.id, r.id, r.label, std::nullopt});
  return corpus::Manifest(name, std::move(records));
}

void write_detections(const Context& ctx, const std::vector<search::Detection>& detections) {
  std::string body;
  for (const auto& d : detections) {
    ordered_json j;
    j["id"] = d.id;
    j["similarity"] = d.similarity;
    j["label"] = d.label;
    j["toolkit_version"] = std::string(kToolkitVersion);
    j["config_digest"] = ctx.outputs.digest();
    body += j.dump() + "\n";
  }
  write_file(ctx.outputs.path("detections.jsonl"), body);
  ctx.out << body;
}

// ---------------------------------------------------------------- extract

int cmd_extract(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const fs::path model_path = c.require_path("model");
  const fs::path manifest_path = c.require_path("manifest");
  const auto pert = perturbation_for(c);
  const double budget = c.get_double("max_failure_fraction");
  std::optional<perturb::SeveritySchedule> schedule_storage;
  const auto& schedule = schedule_for(c, schedule_storage);

  const auto model = backend::OnnxEmbedder::load(model_path);
  const auto manifest = corpus::load_manifest(manifest_path);

  backend::ExtractOptions options;
  options.perturbation = pert;
  options.schedule = &schedule;
  options.salvage = true;
  options.threads = ctx.threads;
  for (const auto& [k, v] : c.digest_entries()) options.extra["config." + k] = v;
  options.extra["config_digest"] = ctx.outputs.digest();
  options.extra["manifest"] = manifest.name();
  const auto result = backend::extract_dataset(manifest, *model, options);

  if (!result.failures.empty()) {
    const auto p = ctx.outputs.csv("failures.csv", backend::failure_report_csv(result.failures));
    for (const auto& f : result.failures) ctx.err << "failed: " << f.id << ": " << f.message << "\n";
    ctx.err << result.failures.size() << " of " << result.attempted << " images failed; list in " << p.string() << "\n";
  }
  backend::enforce_failure_budget(result, budget);

  const fs::path store_path = c.get("store").empty() ? ctx.outputs.path("embeddings.mleb") : fs::path(c.get("store"));
  backend::store_write(result.store, store_path);
  ctx.out << "wrote " << result.store.records.size() << " records (" << result.store.header.layers << " layers x "
          << result.store.header.dim << ") to " << store_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- search

int cmd_search(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto policy = as_usage("threshold", [&] { return metrics::ThresholdPolicy::parse(c.get("threshold")); });
  const double fraction = c.get_double("fraction");
  if (!(fraction > 0.0)) throw UsageError("--fraction must be > 0");
  const std::uint64_t root = c.get_u64("seed");
  const int reference = c.get_int("reference_size");
  if (reference < 0) throw UsageError("--reference-size must be >= 0");
  const double budget = c.get_double("max_failure_fraction");
  std::optional<perturb::SeveritySchedule> schedule_storage;
  const auto& schedule = schedule_for(c, schedule_storage);

  std::vector<backend::EmbeddingStore> stores;
  if (!c.get("store").empty()) stores.push_back(backend::store_read(c.require_path("store")));
  for (const auto& p : c.get_list("stores")) {
    if (!fs::exists(p)) fail(ErrorCode::kNotFound, "stores path does not exist: " + p);
    stores.push_back(backend::store_read(p));
  }
  const bool extraction_mode = stores.empty();

  std::unique_ptr<backend::OnnxEmbedder> model;
  std::optional<corpus::Manifest> source;
  std::string model_name, schedule_version;
  int layers = 0, dim = 0;
  if (extraction_mode) {
    model = backend::OnnxEmbedder::load(c.require_path("model"));
    source = corpus::load_manifest(c.require_path("manifest"));
    model_name = model->spec().name;
    layers = model->spec().num_layers;
    dim = model->spec().hidden_dim;
    schedule_version = schedule.version;
  } else {
    const auto& h = stores.front().header;
    for (const auto& s : stores) {
      if (s.header.model_name != h.model_name || s.header.layers != h.layers || s.header.dim != h.dim ||
          s.header.schedule_version != h.schedule_version) {
        fail(ErrorCode::kInvalidArgument, "stores disagree on model or severity schedule");
      }
    }
    model_name = h.model_name;
    layers = h.layers;
    dim = h.dim;
    schedule_version = h.schedule_version;
    source = manifest_from_scores(score::score_store(stores.front(), ctx.threads).matrix,
                                  c.get("store").empty() ? c.get_list("stores").front() : c.get("store"));
  }

  const std::size_t reference_size = reference > 0 ? static_cast<std::size_t>(reference) : source->size();
  const std::uint64_t subset_seed = derive_seed(root, "subset");
  const auto subset = corpus::sample_subset(*source, fraction, reference_size, subset_seed, c.get_bool("balanced"));
  const auto ids = subset.ids();

  search::SearchSpace space;
  space.layers = c.get("layers") == "all" ? search::SearchSpace::full(layers).layers
                                           : as_usage("layers", [&] { return search::parse_index_list(c.get("layers"), 1, layers); });
  std::vector<backend::EmbeddingStore> restricted;
  std::optional<corpus::Manifest> subset_manifest;
  std::optional<backend::PairExtractor> extractor;
  search::CellEvaluator evaluator;
  std::uint64_t pert_seed = 0;
  if (extraction_mode) {
    space.kinds = c.get("kinds").empty() ? std::vector{as_usage("kind", [&] { return perturb::parse_kind(c.get("kind")); })}
                                         : as_usage("kinds", [&] { return search::parse_kind_list(c.get("kinds")); });
    space.severities = c.get("severities").empty()
                           ? std::vector{c.get_int("severity")}
                           : as_usage("severities", [&] { return search::parse_index_list(c.get("severities"), 1, 8); });
    subset_manifest.emplace(source->name() + "#subset", subset.records);
    backend::ExtractOptions options;
    options.schedule = &schedule;
    options.threads = ctx.threads;
    extractor.emplace(*subset_manifest, *model, options);
    evaluator = search::extractor_evaluator(*extractor, ctx.threads);
    pert_seed = derive_seed(root, "perturbation");
  } else {
    std::set<perturb::PerturbationKind> kinds;
    std::set<int> severities;
    for (const auto& s : stores) {
      kinds.insert(s.header.perturbation.kind);
      severities.insert(s.header.perturbation.severity);
      restricted.push_back(search::restrict_store(s, ids));
    }
    if (!c.get("kinds").empty()) {
      const auto wanted = as_usage("kinds", [&] { return search::parse_kind_list(c.get("kinds")); });
      std::erase_if(kinds, [&](auto k) { return std::find(wanted.begin(), wanted.end(), k) == wanted.end(); });
    }
    if (!c.get("severities").empty()) {
      const auto wanted = as_usage("severities", [&] { return search::parse_index_list(c.get("severities"), 1, 8); });
      std::erase_if(severities, [&](int v) { return std::find(wanted.begin(), wanted.end(), v) == wanted.end(); });
    }
    space.kinds.assign(kinds.begin(), kinds.end());
    space.severities.assign(severities.begin(), severities.end());
    if (space.kinds.empty() || space.severities.empty()) {
      fail(ErrorCode::kInvalidArgument, "no store matches the requested kinds and severities");
    }
    evaluator = search::store_evaluator(restricted, ctx.threads);
  }
  as_usage("layers", [&] {
    space.validate(layers);
    return 0;
  });

  std::map<std::pair<perturb::PerturbationKind, int>, score::ScoreMatrix> matrices;
  const search::CellEvaluator caching = [&](const perturb::PerturbationSpec& spec) {
    search::CellScores cell = evaluator(spec);
    matrices[{spec.kind, spec.severity}] = cell.matrix;
    return cell;
  };
  const auto result = search::search_full(space, caching, pert_seed, budget);
  const auto& best = result.best;
  const auto& matrix = matrices.at({best.kind, best.severity});

  search::DetectorConfig cfg;
  cfg.model_name = model_name;
  cfg.num_layers = layers;
  cfg.hidden_dim = dim;
  cfg.perturbation = {best.kind, best.severity, pert_seed};
  if (!extraction_mode) {
    for (const auto& s : stores) {
      if (s.header.perturbation.kind == best.kind && s.header.perturbation.severity == best.severity) {
        cfg.perturbation = s.header.perturbation;
        break;
      }
    }
  }
  cfg.optimal_layer = best.layer;
  cfg.threshold = metrics::calibrate_threshold(matrix.column(best.layer), matrix.labels(), policy);
  auto& prov = cfg.provenance;
  prov.subset_seed = subset_seed;
  prov.fraction_percent = fraction;
  prov.reference_size = reference_size;
  prov.subset_size = subset.records.size();
  prov.balanced = subset.balanced;
  prov.subset_source = subset.source;
  prov.schedule_version = schedule_version;
  prov.search_space = space.describe();
  prov.search_auroc = best.auroc;
  prov.search_ap = best.ap;
  prov.config_digest = ctx.outputs.digest();
  cfg.validate();

  write_file(ctx.outputs.path("detector.json"), cfg.to_json());
  ctx.outputs.csv("surface.csv", result.surface_csv());
  std::string layer_csv = "layer,auroc,ap\n";
  for (const auto& cell : result.surface) {
    if (cell.kind != best.kind || cell.severity != best.severity) continue;
    layer_csv += std::to_string(cell.layer) + "," + format_double(cell.auroc) + "," + format_double(cell.ap) + "\n";
  }
  ctx.outputs.csv("layer_auroc.csv", layer_csv);
  ctx.outputs.json("subset.json", ordered_json::parse(corpus::subset_sidecar_json(subset)));

  if (result.failures > 0) ctx.err << result.failures << " failed extractions across the search (within budget)\n";
  ctx.out << "optimal_layer=" << best.layer << " kind=" << perturb::to_string(best.kind) << " severity=" << best.severity
          << " auroc=" << format_double(best.auroc) << " ap=" << format_double(best.ap)
          << " tau=" << format_double(cfg.threshold.tau) << " subset=" << subset.records.size() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- detect

int cmd_detect(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto cfg = search::load_detector_config(c.require_path("detector"));
  std::vector<search::Detection> detections;

  if (!c.get("store").empty()) {
    const auto store = backend::store_read(c.require_path("store"));
    check_store_matches(store.header, cfg);
    detections = search::detect_store(store, cfg);
    write_detections(ctx, detections);
    return kExitOk;
  }

  std::optional<perturb::SeveritySchedule> schedule_storage;
  const auto& schedule = schedule_for(c, schedule_storage);
  const auto model = backend::OnnxEmbedder::load(c.require_path("model"));
  cfg.check_compatible(model->spec(), schedule.version);

  if (!c.get("image").empty()) {
    const fs::path image_path = c.require_path("image");
    const std::string id = c.get("id").empty() ? image_path.filename().string() : c.get("id");
    const auto image = perturb::load_image(image_path);
    detections.push_back(search::detect_image(id, image, cfg, *model, schedule));
  } else {
    const auto manifest = corpus::load_manifest(c.require_path("manifest"));
    const auto& records = manifest.records();
    std::vector<std::optional<search::Detection>> slots(records.size());
    std::vector<std::string> errors(records.size());
    parallel_for(records.size(), ctx.threads, [&](std::size_t i) {
      try {
        slots[i] = search::detect_image(records[i].id, perturb::load_image(records[i].path), cfg, *model, schedule);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!slots[i]) fail(ErrorCode::kExtraction, records[i].id + ": " + errors[i]);
      detections.push_back(*slots[i]);
    }
  }
  write_detections(ctx, detections);
  return kExitOk;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const int bins = c.get_int("bins");
  if (bins < 1) throw UsageError("--bins must be >= 1");
  const auto store = backend::store_read(c.require_path("store"));
  std::optional<search::DetectorConfig> cfg;
  if (!c.get("detector").empty()) {
    cfg = search::load_detector_config(c.require_path("detector"));
    check_store_matches(store.header, *cfg);
  }
  const auto scored = score::score_store(store, ctx.threads);
  const auto& m = scored.matrix;
  const auto ev = search::evaluate(m, cfg ? &*cfg : nullptr);

  ordered_json j;
  j["model"] = store.header.model_name;
  j["perturbation"] = store.header.perturbation.describe();
  j["n_images"] = m.rows.size();
  j["n_real"] = m.count(Label::kReal);
  j["n_fake"] = m.count(Label::kGenerated);
  j["skipped"] = ordered_json::array();
  for (const auto& s : scored.skipped) j["skipped"].push_back({{"id", s.id}, {"reason", s.reason}});
  j["optimal_layer"] = cfg ? ordered_json(ev.optimal_layer) : ordered_json(nullptr);
  j["at_optimal"] = ev.at_optimal ? ordered_json::parse(ev.at_optimal->to_json()) : ordered_json(nullptr);
  if (ev.rates) {
    j["rates"] = {{"tpr", ev.rates->tpr}, {"fpr", ev.rates->fpr}, {"accuracy", ev.rates->accuracy}};
  } else {
    j["rates"] = nullptr;
  }
  j["per_layer"] = ordered_json::array();
  for (const auto& p : ev.per_layer) j["per_layer"].push_back({{"layer", p.layer}, {"auroc", p.auroc}, {"ap", p.ap}});
  ctx.outputs.json("metrics.json", j);

  ctx.outputs.csv("layer_metrics.csv", search::per_layer_csv(ev));
  ctx.outputs.csv("mean_profile.csv", score::mean_profile_csv(score::mean_profile(m)));
  ctx.outputs.csv("scores.csv", score::score_matrix_csv(m));
  for (int l = 1; l <= m.layers; ++l) {
    char name[48];
    std::snprintf(name, sizeof(name), "histograms/layer_%02d.csv", l);
    ctx.outputs.csv(name, score::histogram_csv(score::histogram(m, l, bins)));
  }
  if (cfg) {
    const auto samples = metrics::from_similarities(m.column(cfg->optimal_layer), m.labels());
    ctx.outputs.csv("roc.csv", metrics::roc_csv(metrics::roc_curve(samples)));
    ctx.outputs.csv("pr.csv", metrics::pr_csv(metrics::pr_curve(samples)));
  }

  const auto best = std::max_element(ev.per_layer.begin(), ev.per_layer.end(),
                                     [](const auto& a, const auto& b) { return a.auroc < b.auroc; });
  ctx.out << "images=" << m.rows.size() << " best_layer=" << best->layer << " best_auroc=" << format_double(best->auroc);
  if (ev.at_optimal) {
    ctx.out << " optimal_layer=" << ev.optimal_layer << " auroc=" << format_double(ev.at_optimal->auroc)
            << " ap=" << format_double(ev.at_optimal->ap) << " accuracy=" << format_double(ev.rates->accuracy);
  }
  ctx.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- id

int cmd_id(const Context& ctx) {
  const RunConfig& c = ctx.config;
  intdim::IdProfileOptions options;
  const std::string variant = c.get("variant");
  if (variant == "original") {
    options.variant = backend::Variant::kOriginal;
  } else if (variant == "perturbed") {
    options.variant = backend::Variant::kPerturbed;
  } else {
    throw UsageError("--variant must be original or perturbed");
  }
  const int cap = c.get_int("sample_cap");
  if (cap < 3) throw UsageError("--sample-cap must be >= 3");
  options.sample_cap = static_cast<std::size_t>(cap);
  options.seed = derive_seed(c.get_u64("seed"), "intdim");
  options.twonn.trim_fraction = c.get_double("trim_fraction");
  if (!(options.twonn.trim_fraction >= 0.0 && options.twonn.trim_fraction < 1.0)) {
    throw UsageError("--trim-fraction must lie in [0, 1)");
  }
  const std::string fit = c.get("id_fit");
  if (fit == "mle") {
    options.twonn.fit = intdim::TwoNnFit::kCensoredMle;
  } else if (fit == "linear") {
    options.twonn.fit = intdim::TwoNnFit::kLinearFit;
  } else {
    throw UsageError("--id-fit must be mle or linear");
  }
  options.twonn.threads = ctx.threads;

  const auto store = backend::store_read(c.require_path("store"));
  const auto profile = intdim::id_profile(store, options);
  ctx.outputs.csv("id_profile.csv", intdim::id_profile_csv(profile));
  std::size_t failed = 0;
  for (const auto& e : profile) {
    if (!e.estimate) {
      ++failed;
      ctx.err << "layer " << e.layer << ": " << e.error << "\n";
    }
  }
  for (const auto& e : profile) {
    if (e.estimate) ctx.out << e.layer << " " << format_double(e.estimate->id_hat) << "\n";
  }
  return failed == profile.size() ? kExitData : kExitOk;
}

struct Subcommand {
  std::string name;
  std::string help;
  std::vector<std::string_view> keys;
  std::function<int(const Context&)> run;
};

std::vector<Subcommand> subcommands() {
  return {
      {"extract", "embed every manifest image and its perturbed copy into a store",
       {"model", "manifest", "store", "out_dir", "seed", "kind", "severity", "max_failure_fraction", "schedule", "threads"},
       cmd_extract},
      {"search", "find the optimal layer (optionally kind and severity) on a sampled subset",
       {"model", "manifest", "store", "stores", "out_dir", "seed", "kind", "severity", "fraction", "reference_size",
        "balanced", "layers", "kinds", "severities", "threshold", "max_failure_fraction", "schedule", "threads"},
       cmd_search},
      {"detect", "classify images (or a store) with a detector config",
       {"detector", "model", "manifest", "store", "image", "id", "out_dir", "schedule", "threads"},
       cmd_detect},
      {"eval", "per-layer metrics, profiles and histograms for a store",
       {"store", "detector", "out_dir", "bins", "threads"},
       cmd_eval},
      {"id", "intrinsic dimension profile across layers",
       {"store", "out_dir", "seed", "sample_cap", "trim_fraction", "id_fit", "variant", "threads"},
       cmd_id},
  };
}

std::string flag_name(std::string_view key) {
  std::string f(key);
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"layerwise: training-free detection of generated images from layer-wise embedding robustness"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.require_subcommand(1);

  const auto commands = subcommands();
  std::map<std::string, std::string> storage;
  std::string config_file;
  struct Bound {
    const Subcommand* command = nullptr;
    CLI::App* app = nullptr;
    std::vector<std::pair<std::string, CLI::Option*>> options;
  };
  std::vector<Bound> bound;
  for (const auto& cmd : commands) {
    Bound b;
    b.command = &cmd;
    b.app = app.add_subcommand(cmd.name, cmd.help);
    b.app->add_option("--config", config_file, "flat key = value config file");
    for (auto key : cmd.keys) {
      const KeySpec* spec = find_key(key);
      std::string help(spec->help);
      if (!spec->default_value.empty()) help += " [" + std::string(spec->default_value) + "]";
      b.options.emplace_back(std::string(key), b.app->add_option(flag_name(key), storage[std::string(key)], help));
    }
    bound.push_back(std::move(b));
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (const auto& b : bound) {
    if (!b.app->parsed()) continue;
    try {
      std::map<std::string, std::string> command_line;
      for (const auto& [key, opt] : b.options) {
        if (opt->count() > 0) command_line[key] = storage[key];
      }
      const RunConfig config = RunConfig::resolve(command_line, config_file);
      const int threads = config.get_int("threads");
      if (threads < 0) throw UsageError("--threads must be >= 0");
      const Outputs outputs(config.get("out_dir"), config.digest(b.command->name));
      const Context ctx{config, outputs, out, err, static_cast<unsigned>(threads)};
      return b.command->run(ctx);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const Error& e) {
      err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
      return e.code() == ErrorCode::kBudgetExceeded ? kExitBudget : kExitData;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitData;
    }
  }
  return kExitUsage;
}

}  // namespace layerwise::cli
