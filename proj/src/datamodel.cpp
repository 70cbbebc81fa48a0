#include "vcmbench/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vcmbench/error.hpp"

namespace vcmbench {

using nlohmann::json;

ClassTable::ClassTable(std::vector<ClassEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw DataError("class table must not be empty");
  std::set<std::string> names;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id != static_cast<int>(i)) {
      throw DataError("class ids must be contiguous from 0; entry " + std::to_string(i) + " has id " +
                      std::to_string(entries_[i].id));
    }
    if (entries_[i].name.empty()) throw DataError("class name must not be empty");
    if (!names.insert(entries_[i].name).second) throw DataError("duplicate class name '" + entries_[i].name + "'");
  }
}

ClassTable ClassTable::road_users() {
  static const char* kNames[] = {"person", "rider", "car", "truck", "bus", "train", "motorcycle", "bicycle"};
  std::vector<ClassEntry> e;
  for (int i = 0; i < 8; ++i) e.push_back({i, kNames[i]});
  return ClassTable(std::move(e));
}

std::optional<int> ClassTable::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.id;
  }
  return std::nullopt;
}

const std::string& ClassTable::name(int id) const {
  if (!contains(id)) throw DataError("class id " + std::to_string(id) + " not in class table");
  return entries_[static_cast<std::size_t>(id)].name;
}

const ImageInfo* GroundTruthSet::find_image(std::string_view id) const {
  for (const auto& im : images) {
    if (im.id == id) return &im;
  }
  return nullptr;
}

long long TrainingSchedule::total_iterations() const {
  long long t = 0;
  for (const auto& p : phases) t += p.iterations;
  return t;
}

bool ValidationReport::has(std::string_view kind) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; });
}

namespace {

json parse_json(std::string_view bytes, const char* what) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw DataError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

std::string id_string(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw DataError("image id must be a string or integer");
}

BBox bbox_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("bbox must be [x, y, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json bbox_to_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

std::vector<Polygon> polygons_from_json(const json& j) {
  // Accepts [[x0, y0, x1, y1, ...], ...] or a single flat list.
  std::vector<Polygon> rings;
  auto flat_ring = [](const json& r) {
    if (r.size() % 2 != 0) throw DataError("polygon coordinate list has odd length");
    Polygon p;
    for (std::size_t i = 0; i < r.size(); i += 2) p.push_back({r[i].get<double>(), r[i + 1].get<double>()});
    return p;
  };
  if (j.empty()) return rings;
  if (j[0].is_number()) {
    rings.push_back(flat_ring(j));
  } else {
    for (const auto& r : j) rings.push_back(flat_ring(r));
  }
  return rings;
}

json polygons_to_json(const std::vector<Polygon>& rings) {
  json out = json::array();
  for (const auto& ring : rings) {
    json r = json::array();
    for (const auto& p : ring) {
      r.push_back(p.x);
      r.push_back(p.y);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Clamps to the image rectangle. Returns true if the box changed.
bool clamp_bbox(BBox& b, int width, int height) {
  const BBox before = b;
  const double x0 = std::clamp(b.x, 0.0, static_cast<double>(width));
  const double y0 = std::clamp(b.y, 0.0, static_cast<double>(height));
  const double x1 = std::clamp(b.x + b.w, 0.0, static_cast<double>(width));
  const double y1 = std::clamp(b.y + b.h, 0.0, static_cast<double>(height));
  b = {x0, y0, x1 - x0, y1 - y0};
  return !(b == before);
}

}  // namespace

json rle_to_json(const RleMask& m) {
  return json{{"size", json::array({m.height, m.width})}, {"counts", m.counts}};
}

RleMask rle_from_json(const json& j) {
  if (!j.is_object() || !j.contains("size") || !j.contains("counts")) {
    throw DataError("RLE must be an object with 'size' and 'counts'");
  }
  const auto& size = j.at("size");
  if (!size.is_array() || size.size() != 2) throw DataError("RLE size must be [h, w]");
  if (!j.at("counts").is_array()) throw DataError("only uncompressed RLE counts lists are supported");
  RleMask m;
  m.height = size[0].get<int>();
  m.width = size[1].get<int>();
  for (const auto& c : j.at("counts")) {
    const long long v = c.get<long long>();
    if (v < 0) throw DataError("malformed mask: negative run length");
    m.counts.push_back(static_cast<std::uint32_t>(v));
  }
  validate_rle(m);
  return m;
}

json class_table_to_json(const ClassTable& t) {
  json out = json::array();
  for (const auto& e : t.entries()) out.push_back({{"id", e.id}, {"name", e.name}});
  return out;
}

ClassTable class_table_from_json(const json& j) {
  std::vector<ClassEntry> entries;
  for (const auto& c : j) entries.push_back({c.at("id").get<int>(), c.at("name").get<std::string>()});
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return ClassTable(std::move(entries));
}

// Ground truth ---------------------------------------------------------------

GroundTruthSet parse_ground_truth(std::string_view bytes) {
  const json doc = parse_json(bytes, "ground truth");
  if (!doc.is_object()) throw DataError("ground truth: top level must be an object");
  GroundTruthSet gt;
  try {
    gt.classes = doc.contains("categories") ? class_table_from_json(doc.at("categories")) : ClassTable::road_users();

    std::set<std::string> seen;
    for (const auto& im : doc.value("images", json::array())) {
      ImageInfo info{id_string(im.at("id")), im.at("width").get<int>(), im.at("height").get<int>()};
      if (info.width <= 0 || info.height <= 0) throw DataError("image '" + info.id + "' has non-positive size");
      if (!seen.insert(info.id).second) throw DataError("duplicate image id '" + info.id + "'");
      gt.images.push_back(std::move(info));
    }

    std::size_t pos = 0;
    for (const auto& a : doc.value("annotations", json::array())) {
      const std::string where = "annotation " + std::to_string(pos);
      GtInstance inst;
      inst.image_id = id_string(a.at("image_id"));
      const ImageInfo* img = gt.find_image(inst.image_id);
      if (!img) throw DataError(where + ": unknown image '" + inst.image_id + "'");

      if (a.contains("category")) {
        const auto name = a.at("category").get<std::string>();
        const auto id = gt.classes.find(name);
        if (!id) throw DataError(where + ": unknown class '" + name + "'");
        inst.class_id = *id;
      } else if (a.contains("category_id")) {
        inst.class_id = a.at("category_id").get<int>();
        if (!gt.classes.contains(inst.class_id)) {
          throw DataError(where + ": unknown class id " + std::to_string(inst.class_id));
        }
      } else {
        throw DataError(where + ": missing category");
      }
      inst.ignore = a.value("ignore", false);

      if (a.contains("segmentation") && !a.at("segmentation").is_null()) {
        const auto& seg = a.at("segmentation");
        if (seg.is_object()) {
          inst.mask = rle_from_json(seg);
        } else {
          inst.polygons = polygons_from_json(seg);
          if (!inst.polygons.empty()) {
            auto r = rasterize_polygons(inst.polygons, img->width, img->height);
            for (auto& w : r.warnings) gt.warnings.push_back(where + ": " + w);
            inst.mask = std::move(r.mask);
          }
        }
        if (inst.mask && (inst.mask->width != img->width || inst.mask->height != img->height)) {
          throw DataError(where + ": mask extent differs from image extent");
        }
      }

      if (a.contains("bbox")) {
        inst.bbox = bbox_from_json(a.at("bbox"));
      } else if (inst.mask) {
        inst.bbox = mask_bbox(*inst.mask);
      } else {
        throw DataError(where + ": needs a bbox or a segmentation");
      }
      if (clamp_bbox(inst.bbox, img->width, img->height)) {
        gt.warnings.push_back(where + ": bbox clamped to image bounds");
      }
      if (inst.bbox.w < 1.0 || inst.bbox.h < 1.0) {
        if (inst.mask && inst.mask->area() == 0) {
          gt.warnings.push_back(where + ": empty instance dropped");
          ++pos;
          continue;
        }
        throw DataError(where + ": bbox smaller than one pixel after clamping");
      }
      gt.instances.push_back(std::move(inst));
      ++pos;
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("ground truth: ") + e.what());
  }
  return gt;
}

std::string serialize_ground_truth(const GroundTruthSet& gt) {
  json doc;
  doc["categories"] = class_table_to_json(gt.classes);
  doc["images"] = json::array();
  for (const auto& im : gt.images) doc["images"].push_back({{"id", im.id}, {"width", im.width}, {"height", im.height}});
  doc["annotations"] = json::array();
  for (const auto& inst : gt.instances) {
    json a{{"image_id", inst.image_id},
           {"category", gt.classes.name(inst.class_id)},
           {"bbox", bbox_to_json(inst.bbox)},
           {"ignore", inst.ignore}};
    if (!inst.polygons.empty()) {
      a["segmentation"] = polygons_to_json(inst.polygons);
    } else if (inst.mask) {
      a["segmentation"] = rle_to_json(*inst.mask);
    }
    doc["annotations"].push_back(std::move(a));
  }
  return doc.dump(1);
}

void append_cityscapes_polygons(GroundTruthSet& into, std::string_view image_id, std::string_view bytes) {
  const json doc = parse_json(bytes, "cityscapes polygons");
  if (into.classes.empty()) into.classes = ClassTable::road_users();
  try {
    const ImageInfo info{std::string(image_id), doc.at("imgWidth").get<int>(), doc.at("imgHeight").get<int>()};
    if (info.width <= 0 || info.height <= 0) throw DataError("cityscapes polygons: non-positive image size");
    if (into.find_image(info.id)) throw DataError("duplicate image id '" + info.id + "'");
    into.images.push_back(info);

    std::size_t pos = 0;
    for (const auto& obj : doc.value("objects", json::array())) {
      std::string label = obj.at("label").get<std::string>();
      bool ignore = false;
      constexpr std::string_view kGroup = "group";
      if (label.size() > kGroup.size() && label.ends_with(kGroup)) {
        label.resize(label.size() - kGroup.size());
        ignore = true;
      }
      const auto cls = into.classes.find(label);
      if (!cls) {
        ++pos;
        continue;
      }
      Polygon ring;
      for (const auto& v : obj.at("polygon")) ring.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      if (ring.size() < 3) {
        into.warnings.push_back("object " + std::to_string(pos) + ": polygon with fewer than 3 vertices skipped");
        ++pos;
        continue;
      }
      GtInstance inst;
      inst.image_id = info.id;
      inst.class_id = *cls;
      inst.ignore = ignore;
      inst.polygons.push_back(std::move(ring));
      auto r = rasterize_polygons(inst.polygons, info.width, info.height);
      for (auto& w : r.warnings) into.warnings.push_back("object " + std::to_string(pos) + ": " + w);
      inst.mask = std::move(r.mask);
      inst.bbox = mask_bbox(*inst.mask);
      if (inst.mask->area() > 0) into.instances.push_back(std::move(inst));
      ++pos;
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("cityscapes polygons: ") + e.what());
  }
}

// Detections -----------------------------------------------------------------

DetectionSet parse_detections(std::string_view bytes, const ClassTable& classes) {
  const json doc = parse_json(bytes, "detections");
  if (!doc.is_array()) throw DataError("detections: top level must be an array");
  DetectionSet out;
  std::size_t pos = 0;
  for (const auto& r : doc) {
    const std::string where = "detection " + std::to_string(pos);
    try {
      if (!r.contains("image_id")) throw DataError(where + ": missing image_id");
      Detection d;
      d.image_id = id_string(r.at("image_id"));
      d.class_id = r.at("category_id").get<int>();
      if (!classes.contains(d.class_id)) throw DataError(where + ": unknown class id " + std::to_string(d.class_id));
      d.score = r.at("score").get<double>();
      if (!(d.score >= 0.0 && d.score <= 1.0)) {
        throw DataError(where + ": score " + std::to_string(d.score) + " outside [0,1]");
      }
      if (r.contains("segmentation") && !r.at("segmentation").is_null()) d.mask = rle_from_json(r.at("segmentation"));
      if (r.contains("bbox")) {
        d.bbox = bbox_from_json(r.at("bbox"));
      } else if (d.mask) {
        d.bbox = mask_bbox(*d.mask);
      } else {
        throw DataError(where + ": needs a bbox or a segmentation");
      }
      d.order = pos;
      out.by_image[d.image_id].push_back(out.detections.size());
      out.detections.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    ++pos;
  }
  return out;
}

std::string serialize_detections(const DetectionSet& dets) {
  json doc = json::array();
  for (const auto& d : dets.detections) {
    json r{{"image_id", d.image_id}, {"category_id", d.class_id}, {"bbox", bbox_to_json(d.bbox)}, {"score", d.score}};
    if (d.mask) r["segmentation"] = rle_to_json(*d.mask);
    doc.push_back(std::move(r));
  }
  return doc.dump(1);
}

// Manifest -------------------------------------------------------------------

std::string_view to_string(PhaseLabel label) {
  switch (label) {
    case PhaseLabel::pristine: return "pristine";
    case PhaseLabel::compressed: return "compressed";
    case PhaseLabel::mixed: return "mixed";
  }
  return "pristine";
}

PhaseLabel phase_label_from_string(std::string_view s) {
  if (s == "pristine") return PhaseLabel::pristine;
  if (s == "compressed") return PhaseLabel::compressed;
  if (s == "mixed") return PhaseLabel::mixed;
  throw DataError("unknown phase label '" + std::string(s) + "'");
}

json schedule_to_json(const TrainingSchedule& s) {
  json phases = json::array();
  for (const auto& p : s.phases) {
    phases.push_back({{"order", p.order},
                      {"label", to_string(p.label)},
                      {"iterations", p.iterations},
                      {"selector",
                       {{"include_pristine", p.selector.include_pristine},
                        {"include_compressed", p.selector.include_compressed},
                        {"codec", p.selector.codec},
                        {"qualities", p.selector.qualities}}}});
  }
  return {{"detector", s.detector},
          {"phases", phases},
          {"total_iterations", s.total_iterations()},
          {"hyperparameters", s.hyperparameters}};
}

TrainingSchedule schedule_from_json(const json& j) {
  TrainingSchedule s;
  s.detector = j.at("detector").get<std::string>();
  for (const auto& p : j.at("phases")) {
    TrainingPhase ph;
    ph.order = p.at("order").get<int>();
    ph.label = phase_label_from_string(p.at("label").get<std::string>());
    ph.iterations = p.at("iterations").get<long long>();
    const auto& sel = p.at("selector");
    ph.selector.include_pristine = sel.at("include_pristine").get<bool>();
    ph.selector.include_compressed = sel.at("include_compressed").get<bool>();
    ph.selector.codec = sel.value("codec", "");
    ph.selector.qualities = sel.value("qualities", std::vector<double>{});
    s.phases.push_back(std::move(ph));
  }
  s.hyperparameters = j.value("hyperparameters", json::object());
  return s;
}

std::string serialize_manifest(const DatasetManifest& m) {
  json images = json::array();
  for (const auto& im : m.images) {
    json r{{"id", im.image_id},
           {"width", im.width},
           {"height", im.height},
           {"path", im.source_path},
           {"stem", im.stem},
           {"variant", nullptr}};
    if (im.variant) r["variant"] = {{"codec", im.variant->codec}, {"quality", im.variant->quality}};
    images.push_back(std::move(r));
  }
  json prov = json::array();
  for (const auto& p : m.provenance) {
    prov.push_back({{"codec", p.codec}, {"quality", p.quality}, {"profile_hash", p.profile_hash}, {"items", p.items}});
  }
  json doc{{"schema_version", m.schema_version},
           {"name", m.name},
           {"classes", class_table_to_json(m.classes)},
           {"sampling_policy", m.sampling_policy},
           {"schedule", schedule_to_json(m.schedule)},
           {"provenance", prov},
           {"images", images}};
  return doc.dump(1);
}

DatasetManifest parse_manifest(std::string_view bytes) {
  const json doc = parse_json(bytes, "manifest");
  DatasetManifest m;
  try {
    m.schema_version = doc.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
      throw DataError("manifest: unsupported schema_version " + std::to_string(m.schema_version));
    }
    m.name = doc.value("name", "");
    m.classes = class_table_from_json(doc.at("classes"));
    m.sampling_policy = doc.value("sampling_policy", "uniform");
    m.schedule = schedule_from_json(doc.at("schedule"));
    for (const auto& p : doc.value("provenance", json::array())) {
      m.provenance.push_back({p.at("codec").get<std::string>(), p.at("quality").get<double>(),
                              p.value("profile_hash", ""), p.value("items", std::size_t{0})});
    }
    for (const auto& r : doc.at("images")) {
      ImageRecord im;
      im.image_id = r.at("id").get<std::string>();
      im.width = r.at("width").get<int>();
      im.height = r.at("height").get<int>();
      im.source_path = r.value("path", "");
      im.stem = r.value("stem", im.image_id);
      if (!r.at("variant").is_null()) {
        im.variant = CompressedVariant{r["variant"].at("codec").get<std::string>(), r["variant"].at("quality").get<double>()};
      }
      m.images.push_back(std::move(im));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  return m;
}

namespace {

bool selector_matches(const ImageSelector& sel, const ImageRecord& im) {
  if (im.pristine()) return sel.include_pristine;
  if (!sel.include_compressed) return false;
  if (!sel.codec.empty() && im.variant->codec != sel.codec) return false;
  if (sel.qualities.empty()) return true;
  return std::find(sel.qualities.begin(), sel.qualities.end(), im.variant->quality) != sel.qualities.end();
}

std::string quality_label(const CompressedVariant& v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s@%g", v.codec.c_str(), v.quality);
  return buf;
}

}  // namespace

std::vector<const ImageRecord*> select_images(const DatasetManifest& m, const ImageSelector& sel) {
  std::vector<const ImageRecord*> out;
  for (const auto& im : m.images) {
    if (selector_matches(sel, im)) out.push_back(&im);
  }
  return out;
}

ValidationReport validate_manifest(const DatasetManifest& m) {
  ValidationReport rep;
  auto add = [&](std::string kind, std::string msg) { rep.violations.push_back({std::move(kind), std::move(msg)}); };

  std::set<std::string> ids;
  std::set<std::string> pristine_stems;
  for (const auto& im : m.images) {
    if (!ids.insert(im.image_id).second) add("duplicate id", "image id '" + im.image_id + "' appears more than once");
    if (im.width <= 0 || im.height <= 0) add("invalid dimensions", "image '" + im.image_id + "' has non-positive size");
    if (im.pristine()) pristine_stems.insert(im.image_id);
  }
  const std::size_t n_pristine = pristine_stems.size();

  // Per compressed level: count and stems covered.
  std::map<std::pair<std::string, double>, std::set<std::string>> levels;
  std::map<std::pair<std::string, double>, std::size_t> level_counts;
  for (const auto& im : m.images) {
    if (im.pristine()) continue;
    const auto key = std::make_pair(im.variant->codec, im.variant->quality);
    ++level_counts[key];
    levels[key].insert(im.stem);
    if (!pristine_stems.count(im.stem)) {
      add("dangling reference", "compressed image '" + im.image_id + "' references missing pristine '" + im.stem + "'");
    }
  }
  for (const auto& [key, count] : level_counts) {
    if (count != n_pristine) {
      add("unequal variant count", quality_label({key.first, key.second}) + " has " + std::to_string(count) +
                                       " images, pristine set has " + std::to_string(n_pristine));
    }
  }

  int last_order = -1;
  for (const auto& ph : m.schedule.phases) {
    if (ph.iterations <= 0) {
      add("non-positive iterations", "phase " + std::to_string(ph.order) + " has " + std::to_string(ph.iterations));
    }
    if (ph.order <= last_order) add("phase order", "phase orders must be strictly increasing");
    last_order = ph.order;
    if (select_images(m, ph.selector).empty()) {
      add("empty selector", "phase " + std::to_string(ph.order) + " (" + std::string(to_string(ph.label)) +
                                ") selects no images");
    }
  }
  return rep;
}

}  // namespace vcmbench
