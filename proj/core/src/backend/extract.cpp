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

#include "layerwise/backend/extract.hpp"

#include "layerwise/parallel.hpp"
#include "layerwise/perturb/image_io.hpp"
#include "layerwise/rng.hpp"

namespace layerwise::backend {

perturb::PerturbationSpec per_image_spec(const perturb::PerturbationSpec& root, std::string_view image_id) {
  perturb::PerturbationSpec spec = root;
  spec.seed = derive_seed(root.seed, image_id);
  return spec;
}

StoreHeader make_header(const ModelSpec& model, const perturb::PerturbationSpec& perturbation,
                        const perturb::SeveritySchedule& schedule) {
  StoreHeader h;
  h.model_name = model.name;
  h.layers = model.num_layers;
  h.dim = model.hidden_dim;
  h.perturbation = perturbation;
  h.schedule_version = schedule.version;
  h.rng = std::string(kRngName) + "/" + std::to_string(kRngVersion);
  return h;
}

namespace {

const perturb::SeveritySchedule& schedule_of(const ExtractOptions& options) {
  return options.schedule ? *options.schedule : perturb::SeveritySchedule::builtin();
}

perturb::Image load(const ExtractOptions& options, const corpus::ImageRecord& record) {
  return options.loader ? options.loader(record) : perturb::load_image(record.path);
}

std::string describe(const std::exception& e) { return e.what(); }

struct Slot {
  std::optional<LayerMatrix> original;
  std::optional<LayerMatrix> perturbed;
  std::string error;
};

ExtractResult assemble(const std::vector<const corpus::ImageRecord*>& records, std::vector<Slot>& slots,
                       StoreHeader header, const ExtractOptions& options) {
  ExtractResult result;
  result.attempted = records.size();
  header.extra.insert(options.extra.begin(), options.extra.end());
  result.store.header = std::move(header);
  for (std::size_t k = 0; k < records.size(); ++k) {
    Slot& s = slots[k];
    if (!s.error.empty()) {
      result.failures.push_back({records[k]->id, s.error});
      continue;
    }
    result.store.records.push_back({records[k]->id, records[k]->label, Variant::kOriginal, std::move(s.original->values)});
    result.store.records.push_back({records[k]->id, records[k]->label, Variant::kPerturbed, std::move(s.perturbed->values)});
  }
  if (!options.salvage && !result.failures.empty()) {
    const auto& first = result.failures.front();
    fail(ErrorCode::kExtraction, "extraction failed for " + std::to_string(result.failures.size()) +
                                     " image(s); first: " + first.id + ": " + first.message);
  }
  return result;
}

}  // namespace

ExtractResult extract_dataset(const corpus::Manifest& manifest, const LayerEmbedder& model,
                              const ExtractOptions& options) {
  options.perturbation.validate();
  const auto& schedule = schedule_of(options);
  std::vector<const corpus::ImageRecord*> records;
  for (const auto& r : manifest.records()) records.push_back(&r);
  std::vector<Slot> slots(records.size());
  parallel_for(records.size(), options.threads, [&](std::size_t k) {
    Slot& s = slots[k];
    try {
      const perturb::Image image = load(options, *records[k]);
      s.original = extract_all_layers(image, model);
      const auto spec = per_image_spec(options.perturbation, records[k]->id);
      s.perturbed = extract_all_layers(perturb::apply(image, spec, schedule), model);
    } catch (const std::exception& e) {
      s.error = describe(e);
    }
  });
  return assemble(records, slots, make_header(model.spec(), options.perturbation, schedule), options);
}

void enforce_failure_budget(const ExtractResult& result, double max_fraction) {
  if (result.failure_fraction() > max_fraction) {
    fail(ErrorCode::kBudgetExceeded, std::to_string(result.failures.size()) + " of " +
                                         std::to_string(result.attempted) + " images failed, above the budget of " +
                                         format_double(max_fraction));
  }
}

std::string failure_report_csv(const std::vector<ExtractionFailure>& failures) {
  std::string out = "id,error\n";
  for (const auto& f : failures) {
    std::string msg = f.message;
    for (auto& c : msg) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    std::string quoted = "\"";
    for (char c : msg) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    out += f.id + "," + quoted + "\"\n";
  }
  return out;
}

PairExtractor::PairExtractor(const corpus::Manifest& images, const LayerEmbedder& model, ExtractOptions options)
    : images_(images), model_(model), options_(std::move(options)) {
  entries_.resize(images_.size());
  parallel_for(entries_.size(), options_.threads, [&](std::size_t k) {
    Entry& e = entries_[k];
    e.record = &images_.records()[k];
    try {
      e.image = load(options_, *e.record);
      e.original = extract_all_layers(*e.image, model_);
    } catch (const std::exception& ex) {
      e.error = describe(ex);
      e.image.reset();
    }
  });
}

ExtractResult PairExtractor::extract(const perturb::PerturbationSpec& perturbation) const {
  perturbation.validate();
  const auto& schedule = schedule_of(options_);
  std::vector<const corpus::ImageRecord*> records;
  for (const auto& e : entries_) records.push_back(e.record);
  std::vector<Slot> slots(entries_.size());
  parallel_for(entries_.size(), options_.threads, [&](std::size_t k) {
    const Entry& e = entries_[k];
    Slot& s = slots[k];
    if (!e.error.empty()) {
      s.error = e.error;
      return;
    }
    try {
      s.original = *e.original;
      const auto spec = per_image_spec(perturbation, e.record->id);
      s.perturbed = extract_all_layers(perturb::apply(*e.image, spec, schedule), model_);
    } catch (const std::exception& ex) {
      s.error = describe(ex);
    }
  });
  ExtractOptions salvaging = options_;
  salvaging.salvage = true;
  return assemble(records, slots, make_header(model_.spec(), perturbation, schedule), salvaging);
}

}  // namespace layerwise::backend
