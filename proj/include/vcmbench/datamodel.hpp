#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vcmbench/geometry.hpp"

namespace vcmbench {

inline constexpr int kManifestSchemaVersion = 1;

struct ClassEntry {
  int id = 0;
  std::string name;
  bool operator==(const ClassEntry&) const = default;
};

// Ordered class list. Ids are contiguous from 0 and names are unique.
class ClassTable {
 public:
  ClassTable() = default;
  explicit ClassTable(std::vector<ClassEntry> entries);

  // person, rider, car, truck, bus, train, motorcycle, bicycle.
  static ClassTable road_users();

  const std::vector<ClassEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(int id) const { return id >= 0 && static_cast<std::size_t>(id) < entries_.size(); }
  std::optional<int> find(std::string_view name) const;
  const std::string& name(int id) const;

  bool operator==(const ClassTable&) const = default;

 private:
  std::vector<ClassEntry> entries_;
};

struct CompressedVariant {
  std::string codec;
  double quality = 0.0;  // QP for integer-axis codecs, codec quality otherwise
  bool operator==(const CompressedVariant&) const = default;
};

struct ImageRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::string source_path;
  // Id of the pristine record this image was derived from; equals image_id
  // for pristine records.
  std::string stem;
  std::optional<CompressedVariant> variant;  // nullopt means pristine

  bool pristine() const { return !variant.has_value(); }
  bool operator==(const ImageRecord&) const = default;
};

struct ImageInfo {
  std::string id;
  int width = 0;
  int height = 0;
  bool operator==(const ImageInfo&) const = default;
};

struct GtInstance {
  std::string image_id;
  int class_id = 0;
  BBox bbox;
  std::optional<RleMask> mask;
  std::vector<Polygon> polygons;  // source polygons, kept for serialization
  bool ignore = false;
  bool operator==(const GtInstance&) const = default;
};

struct Detection {
  std::string image_id;
  int class_id = 0;
  BBox bbox;
  std::optional<RleMask> mask;
  double score = 0.0;
  std::size_t order = 0;  // position in the source file, breaks score ties
  bool operator==(const Detection&) const = default;
};

struct GroundTruthSet {
  ClassTable classes;
  std::vector<ImageInfo> images;
  std::vector<GtInstance> instances;
  std::vector<std::string> warnings;

  const ImageInfo* find_image(std::string_view id) const;
};

struct DetectionSet {
  std::vector<Detection> detections;
  // image_id -> indices into detections, in input order
  std::map<std::string, std::vector<std::size_t>> by_image;
};

enum class PhaseLabel { pristine, compressed, mixed };

// Which manifest images a training phase draws from. An empty quality list
// selects every compressed level of the named codec (or of all codecs when
// codec is empty).
struct ImageSelector {
  bool include_pristine = false;
  bool include_compressed = false;
  std::string codec;
  std::vector<double> qualities;
  bool operator==(const ImageSelector&) const = default;
};

struct TrainingPhase {
  PhaseLabel label = PhaseLabel::pristine;
  ImageSelector selector;
  long long iterations = 0;
  int order = 0;
  bool operator==(const TrainingPhase&) const = default;
};

struct TrainingSchedule {
  std::string detector;
  std::vector<TrainingPhase> phases;
  nlohmann::json hyperparameters = nlohmann::json::object();  // recorded, never interpreted

  long long total_iterations() const;
  bool operator==(const TrainingSchedule&) const = default;
};

struct ProvenanceEntry {
  std::string codec;
  double quality = 0.0;
  std::string profile_hash;
  std::size_t items = 0;
  bool operator==(const ProvenanceEntry&) const = default;
};

struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  std::string name;
  ClassTable classes;
  std::vector<ImageRecord> images;
  TrainingSchedule schedule;
  std::string sampling_policy = "uniform";
  std::vector<ProvenanceEntry> provenance;
  bool operator==(const DatasetManifest&) const = default;
};

struct Violation {
  std::string kind;
  std::string message;
  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(std::string_view kind) const;
};

// Parsing -----------------------------------------------------------------

GroundTruthSet parse_ground_truth(std::string_view bytes);
DetectionSet parse_detections(std::string_view bytes, const ClassTable& classes);
DatasetManifest parse_manifest(std::string_view bytes);

// Converts one Cityscapes-style polygon file ({imgWidth, imgHeight, objects:
// [{label, polygon}]}) and appends its image and instances to `into`.
// "<class>group" labels become ignore regions; other labels are skipped.
void append_cityscapes_polygons(GroundTruthSet& into, std::string_view image_id, std::string_view bytes);

// Serialization -----------------------------------------------------------

std::string serialize_ground_truth(const GroundTruthSet& gt);
std::string serialize_detections(const DetectionSet& dets);
std::string serialize_manifest(const DatasetManifest& m);

nlohmann::json rle_to_json(const RleMask& m);
RleMask rle_from_json(const nlohmann::json& j);
nlohmann::json class_table_to_json(const ClassTable& t);
ClassTable class_table_from_json(const nlohmann::json& j);
nlohmann::json schedule_to_json(const TrainingSchedule& s);
TrainingSchedule schedule_from_json(const nlohmann::json& j);

std::string_view to_string(PhaseLabel label);
PhaseLabel phase_label_from_string(std::string_view s);

// Validation --------------------------------------------------------------

ValidationReport validate_manifest(const DatasetManifest& m);

// Images of `m` matched by `sel`, in manifest order.
std::vector<const ImageRecord*> select_images(const DatasetManifest& m, const ImageSelector& sel);

}  // namespace vcmbench
