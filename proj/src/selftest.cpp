#include "vcmbench/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "vcmbench/augmentation.hpp"
#include "vcmbench/bd.hpp"
#include "vcmbench/codec_orchestrator.hpp"
#include "vcmbench/error.hpp"
#include "vcmbench/process.hpp"

namespace vcmbench {

namespace fs = std::filesystem;

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int SplitMix64::integer(int lo, int hi) {
  return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::uint64_t stable_hash(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr std::uint8_t kClassColors[8][3] = {{220, 20, 60},  {255, 0, 0},   {0, 0, 142},  {0, 0, 70},
                                             {0, 60, 100},   {0, 80, 100},  {0, 0, 230},  {119, 11, 32}};

std::uint16_t clamp8(double v) { return static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 255L)); }

Polygon object_polygon(SplitMix64& rng, int width, int height) {
  const double w = rng.uniform(12.0, 0.35 * width);
  const double h = rng.uniform(12.0, 0.45 * height);
  const double x = rng.uniform(0.0, width - w);
  const double y = rng.uniform(0.0, height - h);
  if (rng.uniform() < 0.5) return {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}};
  // Slanted quadrilateral.
  const double s = 0.2 * w * rng.uniform();
  return {{x + s, y}, {x + w, y + 0.1 * h}, {x + w - s, y + h}, {x, y + 0.9 * h}};
}

double luma(const Image& img, int x, int y) {
  if (img.model != ColorModel::rgb) return img.planes[0].at(x, y);
  return 0.299 * img.planes[0].at(x, y) + 0.587 * img.planes[1].at(x, y) + 0.114 * img.planes[2].at(x, y);
}

// Root-mean-square luma difference inside a box, normalized to [0, 1].
double box_error(const Image& a, const Image& b, const BBox& box) {
  const int x0 = std::max(0, static_cast<int>(box.x));
  const int y0 = std::max(0, static_cast<int>(box.y));
  const int x1 = std::min(a.width(), static_cast<int>(std::ceil(box.x + box.w)));
  const int y1 = std::min(a.height(), static_cast<int>(std::ceil(box.y + box.h)));
  double sum = 0.0;
  long n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double d = luma(a, x, y) - luma(b, x, y);
      sum += d * d;
      ++n;
    }
  }
  const double peak = std::ldexp(1.0, a.bit_depth) - 1.0;
  return n ? std::sqrt(sum / static_cast<double>(n)) / peak : 0.0;
}

RleMask shifted_mask(const std::vector<Polygon>& rings, double dx, double dy, int w, int h) {
  std::vector<Polygon> moved = rings;
  for (auto& ring : moved) {
    for (auto& p : ring) {
      p.x += dx;
      p.y += dy;
    }
  }
  return rasterize_polygons(moved, w, h).mask;
}

RleMask box_mask(const BBox& b, int w, int h) {
  const Polygon ring{{b.x, b.y}, {b.x + b.w, b.y}, {b.x + b.w, b.y + b.h}, {b.x, b.y + b.h}};
  return rasterize_polygon(ring, w, h).mask;
}

}  // namespace

SyntheticDataset write_synthetic_dataset(const fs::path& dir, int n_images, int width, int height, std::uint64_t seed) {
  if (n_images <= 0) throw DataError("synthetic dataset needs at least one image");
  fs::create_directories(dir);
  SyntheticDataset ds;
  ds.gt.classes = ClassTable::road_users();
  for (int k = 0; k < n_images; ++k) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%03d", k);
    SplitMix64 rng(stable_hash(id, seed));
    Image img = make_image(ColorModel::rgb, width, height, 8);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        const double n = rng.uniform(-24.0, 24.0);
        img.planes[0].samples[i] = clamp8(60.0 + 80.0 * x / width + n);
        img.planes[1].samples[i] = clamp8(70.0 + 60.0 * y / height + n);
        img.planes[2].samples[i] = clamp8(90.0 + n);
      }
    }
    ds.gt.images.push_back({id, width, height});

    const int n_objects = rng.integer(5, 7);
    for (int o = 0; o <= n_objects; ++o) {
      const bool ignore = o == n_objects;
      if (ignore && rng.uniform() < 0.6) break;
      const int cls = ignore ? 0 : rng.integer(0, 7);
      Polygon ring = object_polygon(rng, width, height);
      auto raster = rasterize_polygon(ring, width, height);
      if (raster.mask.area() == 0) continue;
      if (!ignore) {
        const Bitmask bits = rle_decode(raster.mask);
        for (int x = 0; x < width; ++x) {
          for (int y = 0; y < height; ++y) {
            if (!bits.at(x, y)) continue;
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            const double n = rng.uniform(-24.0, 24.0);
            for (int c = 0; c < 3; ++c) {
              img.planes[static_cast<std::size_t>(c)].samples[i] = clamp8(kClassColors[cls][c] + n);
            }
          }
        }
      }
      GtInstance inst;
      inst.image_id = id;
      inst.class_id = cls;
      inst.ignore = ignore;
      inst.bbox = mask_bbox(raster.mask);
      inst.mask = std::move(raster.mask);
      inst.polygons.push_back(std::move(ring));
      ds.gt.instances.push_back(std::move(inst));
    }
    const fs::path path = dir / (std::string(id) + ".png");
    write_png(path, img);
    ds.images.push_back(path);
  }
  return ds;
}

DetectionSet synthesize_detections(const GroundTruthSet& gt, const std::map<std::string, Image>& pristine,
                                   const std::map<std::string, Image>& decoded, const SyntheticMethod& method,
                                   IouKind kind, std::uint64_t seed) {
  constexpr double kErrorGain = 2.5;
  constexpr double kMissAbove = 0.5;
  DetectionSet out;
  auto emit = [&](Detection d) {
    d.order = out.detections.size();
    out.by_image[d.image_id].push_back(out.detections.size());
    out.detections.push_back(std::move(d));
  };
  for (const auto& info : gt.images) {
    const Image& ref = pristine.at(info.id);
    const auto dit = decoded.find(info.id);
    const Image& dec = dit == decoded.end() ? ref : dit->second;

    std::size_t idx = 0;
    for (const auto& inst : gt.instances) {
      if (inst.image_id != info.id) continue;
      SplitMix64 rng(stable_hash(info.id, seed) ^ (0x9e37ULL * (idx++ + 1)));
      const double u = rng.uniform(0.5, 1.5);
      const double sx = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.6, 1.0);
      const double sy = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.6, 1.0);
      const double v = rng.uniform(0.8, 1.0);
      if (inst.ignore) continue;
      const double size = std::clamp(std::sqrt(20.0 / std::min(inst.bbox.w, inst.bbox.h)), 0.6, 1.6);
      const double err = box_error(ref, dec, inst.bbox);
      const double d = method.base_jitter * u + method.sensitivity * kErrorGain * err * u * size;
      if (d > kMissAbove) continue;
      Detection det;
      det.image_id = info.id;
      det.class_id = inst.class_id;
      const double dx = sx * d * inst.bbox.w, dy = sy * d * inst.bbox.h;
      det.bbox = {inst.bbox.x + dx, inst.bbox.y + dy, inst.bbox.w, inst.bbox.h};
      det.score = std::clamp(0.55 + 0.45 * v * std::exp(-4.0 * d), 0.0, 1.0);
      if (kind == IouKind::mask) det.mask = shifted_mask(inst.polygons, dx, dy, info.width, info.height);
      emit(std::move(det));
    }

    const double img_err = box_error(ref, dec, {0, 0, static_cast<double>(info.width), static_cast<double>(info.height)});
    const int n_fp = 1 + static_cast<int>(std::floor(img_err * method.sensitivity * 20.0));
    for (int j = 0; j < n_fp; ++j) {
      SplitMix64 rng(stable_hash(info.id, seed + 17) ^ (0x51edULL * (static_cast<std::uint64_t>(j) + 1)));
      Detection det;
      det.image_id = info.id;
      det.class_id = rng.integer(0, static_cast<int>(gt.classes.size()) - 1);
      const double w = rng.uniform(8.0, 30.0), h = rng.uniform(8.0, 30.0);
      det.bbox = {rng.uniform(0.0, info.width - w), rng.uniform(0.0, info.height - h), w, h};
      det.score = rng.uniform(0.05, 0.45);
      if (kind == IouKind::mask) det.mask = box_mask(det.bbox, info.width, info.height);
      emit(std::move(det));
    }
  }
  return out;
}

SelftestResult run_selftest(const SelftestOptions& opts) {
  if (opts.out_dir.empty()) throw DataError("selftest needs an output directory");
  const fs::path root = opts.out_dir;
  fs::create_directories(root);
  if (!opts.codec_dir.empty()) {
    const char* prev = std::getenv("VCMBENCH_CODEC_DIR");
    std::string value = opts.codec_dir.string();
    if (prev && *prev) value += std::string(":") + prev;
    ::setenv("VCMBENCH_CODEC_DIR", value.c_str(), 1);
  }

  const SyntheticDataset ds = write_synthetic_dataset(root / "images", opts.n_images, 160, 96, opts.seed);
  write_file_atomic(root / "gt.json", serialize_ground_truth(ds.gt) + "\n");

  CodecProfile profile;
  profile.name = "mock";
  profile.encode_template = "vcm-mock-codec encode -i {input} -o {output} --qp {qp}";
  profile.decode_template = "vcm-mock-codec decode -i {input} -o {output}";
  profile.quality_axis = QualityAxis::qp_integer;
  profile.quality_min = 0;
  profile.quality_max = 63;
  write_file_atomic(root / "mock_profile.json", profile_to_json(profile).dump(1) + "\n");

  SweepOptions so;
  so.qps.assign(kDefaultQpGrid.begin(), kDefaultQpGrid.end());
  so.parallelism = opts.parallelism;
  so.out_dir = root / "runs";
  so.strict = true;
  SweepStats stats;
  const auto runs = run_sweep(ds.images, profile, so, &stats);
  write_file_atomic(root / "runs" / "runs.json", runs_to_json(runs).dump(1) + "\n");

  const auto pristine_records = pristine_records_from_dir(root / "images");
  for (const char* det : {"faster_rcnn", "mask_rcnn"}) {
    AugmentOptions ao;
    ao.detector = det;
    ao.name = std::string("augment_") + det;
    const auto aug = build_augmented_manifest(pristine_records, runs, ao);
    ao.name = std::string("finetune_") + det;
    const auto ft = build_finetune_manifest(pristine_records, runs, ao);
    for (auto m : {aug, ft}) {
      const auto rep = validate_manifest(m);
      if (!rep.ok()) throw DataError("selftest manifest invalid: " + rep.violations.front().message);
      // Relative to the manifest file so the output tree can be moved.
      const fs::path mdir = fs::absolute(root / "manifests");
      for (auto& im : m.images) im.source_path = fs::absolute(im.source_path).lexically_relative(mdir).string();
      write_file_atomic(mdir / (m.name + ".json"), serialize_manifest(m) + "\n");
    }
  }

  std::map<std::string, Image> pristine;
  for (const auto& p : ds.images) pristine.emplace(p.stem().string(), read_png(p));
  std::map<double, std::map<std::string, Image>> decoded;
  for (const auto& run : runs) {
    for (const auto& it : run.items) decoded[run.quality_param].emplace(it.stem, read_png(it.decoded_path));
  }

  const std::vector<SyntheticMethod> methods{
      {"classic", 1.0, 0.03}, {"augmentation", 0.6, 0.04}, {"fine_tuning", 0.5, 0.035}};
  const std::vector<std::pair<std::string, IouKind>> detectors{{"faster_rcnn", IouKind::box}, {"mask_rcnn", IouKind::mask}};
  std::vector<EvaluationCell> cells;
  const std::map<std::string, Image> none;
  for (const auto& [det_name, kind] : detectors) {
    for (const auto& m : methods) {
      std::vector<std::optional<double>> qps{std::nullopt};
      for (double q : kDefaultQpGrid) qps.emplace_back(q);
      for (const auto& qp : qps) {
        const std::string tag = det_name + "_" + m.name + "_" + (qp ? "qp" + format_quality(*qp) : "uncompressed");
        const DetectionSet dets =
            synthesize_detections(ds.gt, pristine, qp ? decoded.at(*qp) : none, m, kind, opts.seed);
        const std::string rel = "dets/" + tag + ".json";
        write_file_atomic(root / rel, serialize_detections(dets) + "\n");

        ScoreRequest req;
        req.method = m.name;
        req.detector = det_name;
        req.qp = qp;
        req.detections_path = rel;
        req.eval.kind = kind;
        if (qp) {
          const auto it = std::find_if(runs.begin(), runs.end(), [&](const CompressionRun& r) { return r.quality_param == *qp; });
          req.bitrate = it->bitrate();
        }
        EvaluationCell cell = score_cell(ds.gt, dets, req);
        write_cell(root / "cells" / (tag + ".json"), cell);
        cells.push_back(std::move(cell));
      }
    }
  }

  SelftestResult res;
  res.report = compare_cells(cells, "classic");
  for (auto f : {ReportFormat::markdown, ReportFormat::csv, ReportFormat::plotdata, ReportFormat::json}) {
    for (auto& p : emit_report(res.report, f, root / "report")) res.report_files.push_back(p);
  }
  res.executed = stats.executed;
  res.cache_hits = stats.cache_hits;
  return res;
}

}  // namespace vcmbench
