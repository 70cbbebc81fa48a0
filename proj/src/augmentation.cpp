#include "vcmbench/augmentation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "vcmbench/error.hpp"
#include "vcmbench/image_io.hpp"

namespace vcmbench {

namespace fs = std::filesystem;
using nlohmann::json;

const IterationDefaults& iteration_defaults(std::string_view detector) {
  if (detector == "faster_rcnn") return kFasterRcnnIterations;
  if (detector == "mask_rcnn") return kMaskRcnnIterations;
  throw DataError("unknown detector '" + std::string(detector) + "' (expected faster_rcnn or mask_rcnn)");
}

json default_hyperparameters(std::string_view detector) {
  if (detector == "faster_rcnn") {
    return {{"framework", "detectron2"}, {"backbone", "R50-FPN"}, {"base_lr", 0.00025}, {"images_per_batch", 7}};
  }
  if (detector == "mask_rcnn") {
    return {{"framework", "detectron2"},
            {"backbone", "R50-FPN"},
            {"base_lr", 0.01},
            {"lr_steps", json::array({18000})},
            {"lr_after_step", 0.001},
            {"images_per_batch", 2}};
  }
  throw DataError("unknown detector '" + std::string(detector) + "'");
}

std::vector<ImageRecord> pristine_records_from_dir(const fs::path& dir) {
  std::vector<ImageRecord> out;
  for (const auto& p : list_images(dir)) {
    const auto [w, h] = png_dimensions(p);
    const std::string id = p.stem().string();
    out.push_back({id, w, h, p.string(), id, std::nullopt});
  }
  return out;
}

namespace {

std::vector<ImageRecord> collect_images(const std::vector<ImageRecord>& pristine,
                                        const std::vector<CompressionRun>& runs,
                                        std::vector<ProvenanceEntry>& provenance) {
  if (pristine.empty()) throw DataError("pristine set is empty");
  if (runs.empty()) throw DataError("no compressed runs given; augmentation needs at least one quality level");

  std::map<std::string, const ImageRecord*> by_stem;
  for (const auto& im : pristine) {
    if (!im.pristine()) throw DataError("record '" + im.image_id + "' in the pristine set is compressed");
    if (!by_stem.emplace(im.image_id, &im).second) throw DataError("duplicate pristine id '" + im.image_id + "'");
  }

  // Canonical order: codec, quality, then pristine order. Run arrival order
  // does not matter.
  std::vector<const CompressionRun*> ordered;
  for (const auto& r : runs) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](const CompressionRun* a, const CompressionRun* b) {
    return std::tie(a->profile, a->quality_param) < std::tie(b->profile, b->quality_param);
  });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->profile == ordered[i - 1]->profile && ordered[i]->quality_param == ordered[i - 1]->quality_param) {
      throw DataError("duplicate run for " + ordered[i]->profile + " at quality " + format_quality(ordered[i]->quality_param));
    }
  }

  std::vector<std::string> missing;
  std::vector<ImageRecord> images = pristine;
  for (const CompressionRun* run : ordered) {
    std::map<std::string, const RunItem*> items;
    for (const auto& it : run->items) {
      if (it.status != ItemStatus::failed) items[it.stem] = &it;
    }
    for (const auto& im : pristine) {
      const auto found = items.find(im.image_id);
      if (found == items.end()) {
        missing.push_back("(" + im.image_id + ", " + format_quality(run->quality_param) + ")");
        continue;
      }
      ImageRecord rec;
      rec.image_id = im.image_id + "_" + run->profile + "_" + format_quality(run->quality_param);
      rec.width = im.width;
      rec.height = im.height;
      rec.source_path = found->second->decoded_path;
      rec.stem = im.image_id;
      rec.variant = CompressedVariant{run->profile, run->quality_param};
      images.push_back(std::move(rec));
    }
    provenance.push_back({run->profile, run->quality_param, run->profile_hash, run->items.size()});
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ...";
    throw DataError("compressed runs do not cover the pristine set; missing " + std::to_string(missing.size()) +
                    " (image, quality) pair(s): " + list);
  }
  return images;
}

}  // namespace

DatasetManifest build_augmented_manifest(const std::vector<ImageRecord>& pristine,
                                         const std::vector<CompressionRun>& runs, const AugmentOptions& opts) {
  const auto& defaults = iteration_defaults(opts.detector);
  DatasetManifest m;
  m.name = opts.name;
  m.classes = opts.classes;
  m.images = collect_images(pristine, runs, m.provenance);
  m.sampling_policy = "uniform";
  m.schedule.detector = opts.detector;
  m.schedule.hyperparameters = default_hyperparameters(opts.detector);
  const long long iters = opts.iterations > 0 ? opts.iterations : defaults.augmentation;
  ImageSelector all{true, true, "", {}};
  m.schedule.phases.push_back({PhaseLabel::mixed, all, iters, 0});
  return m;
}

TrainingSchedule build_finetune_schedule(long long pristine_iters, long long finetune_iters,
                                         const ImageSelector& compressed, std::string detector) {
  if (pristine_iters <= 0 || finetune_iters <= 0) throw DataError("both phases need a positive iteration count");
  if (!compressed.include_compressed) throw DataError("fine-tuning selector selects no compressed images");
  TrainingSchedule s;
  s.hyperparameters = default_hyperparameters(detector);
  s.detector = std::move(detector);
  s.phases.push_back({PhaseLabel::pristine, ImageSelector{true, false, "", {}}, pristine_iters, 0});
  ImageSelector sel = compressed;
  sel.include_pristine = false;
  s.phases.push_back({PhaseLabel::compressed, sel, finetune_iters, 1});
  return s;
}

TrainingSchedule default_finetune_schedule(std::string_view detector, const ImageSelector& compressed) {
  const auto& d = iteration_defaults(detector);
  return build_finetune_schedule(d.classic, d.finetune, compressed, std::string(detector));
}

DatasetManifest build_finetune_manifest(const std::vector<ImageRecord>& pristine,
                                        const std::vector<CompressionRun>& runs, const AugmentOptions& opts) {
  const auto& defaults = iteration_defaults(opts.detector);
  DatasetManifest m;
  m.name = opts.name;
  m.classes = opts.classes;
  m.images = collect_images(pristine, runs, m.provenance);
  m.sampling_policy = "uniform";
  const long long ft = opts.iterations > 0 ? opts.iterations : defaults.finetune;
  m.schedule = build_finetune_schedule(defaults.classic, ft, ImageSelector{false, true, "", {}}, opts.detector);
  return m;
}

}  // namespace vcmbench
