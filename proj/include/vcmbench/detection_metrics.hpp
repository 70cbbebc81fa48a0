#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcmbench/datamodel.hpp"

namespace vcmbench {

enum class IouKind { box, mask };

// How a detection's overlap with an ignore region is measured.
enum class IgnoreOverlap {
  iou,             // plain intersection over union
  detection_area,  // intersection over the detection's own area
};

// Which notion of class frequency drives the weights of weighted AP.
enum class WeightMode {
  instances,  // number of non-ignored instances per class
  images,     // number of images containing at least one instance
};

enum class MatchFlag { tp, fp, ignored };

struct MatchEntry {
  std::size_t detection = 0;  // index into the span passed to match_detections
  MatchFlag flag = MatchFlag::fp;
  int gt = -1;  // index into the ground-truth span, -1 when unmatched
  double iou = 0.0;
  double score = 0.0;
  std::size_t order = 0;
};

// Detections in descending score order (ties by input order).
struct MatchResult {
  std::vector<MatchEntry> entries;
  std::size_t n_gt_effective = 0;
};

struct MatchOptions {
  double iou_threshold = 0.5;
  IouKind kind = IouKind::box;
  IgnoreOverlap ignore_overlap = IgnoreOverlap::iou;
  double min_gt_area = 0.0;  // smaller instances are treated as ignore regions
};

// All detections and ground truths must belong to one image and one class.
MatchResult match_detections(std::span<const Detection> dets, std::span<const GtInstance> gts,
                             const MatchOptions& opts);

// All-point interpolated AP over the pooled matches of many images.
// Returns nullopt when n_gt is zero (class absent).
std::optional<double> average_precision(std::span<const MatchResult> results, std::size_t n_gt);

std::vector<double> default_iou_thresholds();  // 0.50, 0.55, ..., 0.95

struct EvalConfig {
  std::vector<double> thresholds = default_iou_thresholds();
  IouKind kind = IouKind::box;
  IgnoreOverlap ignore_overlap = IgnoreOverlap::iou;
  double min_gt_area = 0.0;
  WeightMode weight_mode = WeightMode::instances;
};

struct ClassAp {
  int class_id = 0;
  std::string name;
  bool present = false;  // false when the class has no non-ignored instance
  std::size_t n_instances = 0;
  double ap = 0.0;
  std::vector<double> ap_per_threshold;
};

struct ApBreakdown {
  std::vector<double> thresholds;
  IouKind kind = IouKind::box;
  std::vector<ClassAp> classes;  // one entry per class table entry
  std::size_t skipped_detections = 0;  // detections on images absent from the GT set

  const ClassAp* find(int class_id) const;
};

ApBreakdown ap_per_class(const GroundTruthSet& gt, const DetectionSet& dets, const EvalConfig& cfg = {});

using ClassWeights = std::map<int, double>;

ClassWeights class_weights(const GroundTruthSet& gt, WeightMode mode = WeightMode::instances,
                           double min_gt_area = 0.0, IouKind kind = IouKind::box);

double weighted_ap(const ApBreakdown& breakdown, const ClassWeights& weights);

std::string_view to_string(IouKind k);
IouKind iou_kind_from_string(std::string_view s);
std::string_view to_string(WeightMode m);
WeightMode weight_mode_from_string(std::string_view s);

// One metric document per evaluated (method, qp) cell.
nlohmann::json metrics_to_json(const ApBreakdown& breakdown, const ClassWeights& weights, double wap,
                               const EvalConfig& cfg);

}  // namespace vcmbench
