#include "vcmbench/detection_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vcmbench/error.hpp"

namespace vcmbench {

using nlohmann::json;

namespace {

// Neumaier compensated sum, so the mean of equal values is that value.
double compensated_sum(const std::vector<double>& v) {
  double sum = 0.0, c = 0.0;
  for (double x : v) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

// Overlaps between every detection and ground truth of one (image, class)
// cell. Computed once and reused for every IoU threshold.
struct OverlapTable {
  std::vector<std::size_t> det_order;  // detections sorted by score
  std::size_t n_gt = 0;
  std::vector<double> iou;             // [det][gt]
  std::vector<double> ignore_overlap;  // [det][gt], only filled for ignore GTs
  std::vector<bool> gt_ignore;
  std::vector<double> scores;
  std::vector<std::size_t> orders;
  std::size_t n_effective = 0;
};

double gt_area(const GtInstance& g, IouKind kind) {
  if (kind == IouKind::mask && g.mask) return static_cast<double>(g.mask->area());
  return g.bbox.area();
}

bool effectively_ignored(const GtInstance& g, const MatchOptions& o) {
  return g.ignore || gt_area(g, o.kind) < o.min_gt_area;
}

const RleMask& need_mask(const std::optional<RleMask>& m, const char* what) {
  if (!m) throw DataError(std::string("mask IoU requested but ") + what + " has no mask");
  return *m;
}

template <typename DetAt, typename GtAt>
OverlapTable build_table(std::size_t nd, std::size_t ng, DetAt det_at, GtAt gt_at, const MatchOptions& o) {
  OverlapTable t;
  t.n_gt = ng;
  t.det_order.resize(nd);
  std::iota(t.det_order.begin(), t.det_order.end(), std::size_t{0});
  std::stable_sort(t.det_order.begin(), t.det_order.end(), [&](std::size_t a, std::size_t b) {
    const Detection& da = det_at(a);
    const Detection& db = det_at(b);
    if (da.score != db.score) return da.score > db.score;
    return da.order < db.order;
  });
  t.gt_ignore.resize(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    t.gt_ignore[g] = effectively_ignored(gt_at(g), o);
    if (!t.gt_ignore[g]) ++t.n_effective;
  }
  t.iou.assign(nd * ng, 0.0);
  t.ignore_overlap.assign(nd * ng, 0.0);
  t.scores.resize(nd);
  t.orders.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    const Detection& det = det_at(d);
    t.scores[d] = det.score;
    t.orders[d] = det.order;
    for (std::size_t g = 0; g < ng; ++g) {
      const GtInstance& gt = gt_at(g);
      double v = 0.0;
      double ign = 0.0;
      if (o.kind == IouKind::box) {
        v = bbox_iou(det.bbox, gt.bbox);
        if (t.gt_ignore[g] && o.ignore_overlap == IgnoreOverlap::detection_area) {
          const double a = det.bbox.area();
          ign = a > 0.0 ? bbox_intersection(det.bbox, gt.bbox) / a : 0.0;
        }
      } else {
        const RleMask& dm = need_mask(det.mask, "a detection");
        const RleMask& gm = need_mask(gt.mask, "a ground-truth instance");
        const MaskOverlap ov = mask_overlap(dm, gm);
        v = ov.uni ? static_cast<double>(ov.intersection) / static_cast<double>(ov.uni) : 0.0;
        if (t.gt_ignore[g] && o.ignore_overlap == IgnoreOverlap::detection_area) {
          const auto a = dm.area();
          ign = a ? static_cast<double>(ov.intersection) / static_cast<double>(a) : 0.0;
        }
      }
      t.iou[d * ng + g] = v;
      t.ignore_overlap[d * ng + g] = o.ignore_overlap == IgnoreOverlap::iou ? v : ign;
    }
  }
  return t;
}

MatchResult match_table(const OverlapTable& t, double thr) {
  MatchResult r;
  r.n_gt_effective = t.n_effective;
  std::vector<bool> taken(t.n_gt, false);
  const std::size_t ng = t.n_gt;
  for (std::size_t d : t.det_order) {
    MatchEntry e;
    e.detection = d;
    e.score = t.scores[d];
    e.order = t.orders[d];
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < ng; ++g) {
      if (t.gt_ignore[g] || taken[g]) continue;
      const double v = t.iou[d * ng + g];
      if (v >= thr && v > best_iou) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = true;
      e.flag = MatchFlag::tp;
      e.gt = best;
      e.iou = best_iou;
    } else {
      for (std::size_t g = 0; g < ng; ++g) {
        if (!t.gt_ignore[g]) continue;
        const double v = t.ignore_overlap[d * ng + g];
        if (v >= thr && v > best_iou) {
          best = static_cast<int>(g);
          best_iou = v;
        }
      }
      if (best >= 0) {
        e.flag = MatchFlag::ignored;
        e.gt = best;
        e.iou = best_iou;
      } else {
        e.flag = MatchFlag::fp;
      }
    }
    r.entries.push_back(e);
  }
  return r;
}

void check_threshold(double thr) {
  if (!(thr > 0.0 && thr <= 1.0)) throw DataError("IoU threshold must lie in (0, 1]");
}

}  // namespace

MatchResult match_detections(std::span<const Detection> dets, std::span<const GtInstance> gts,
                             const MatchOptions& opts) {
  check_threshold(opts.iou_threshold);
  const auto table = build_table(
      dets.size(), gts.size(), [&](std::size_t i) -> const Detection& { return dets[i]; },
      [&](std::size_t i) -> const GtInstance& { return gts[i]; }, opts);
  return match_table(table, opts.iou_threshold);
}

std::optional<double> average_precision(std::span<const MatchResult> results, std::size_t n_gt) {
  if (n_gt == 0) return std::nullopt;
  std::vector<const MatchEntry*> pooled;
  for (const auto& r : results) {
    for (const auto& e : r.entries) {
      if (e.flag != MatchFlag::ignored) pooled.push_back(&e);
    }
  }
  std::stable_sort(pooled.begin(), pooled.end(), [](const MatchEntry* a, const MatchEntry* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->order < b->order;
  });
  const std::size_t n = pooled.size();
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (pooled[k]->flag == MatchFlag::tp) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  // Each TP adds 1/n_gt of recall at the enveloped precision of its rank.
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (pooled[k]->flag == MatchFlag::tp) sum += precision[k];
  }
  return sum / static_cast<double>(n_gt);
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

const ClassAp* ApBreakdown::find(int class_id) const {
  for (const auto& c : classes) {
    if (c.class_id == class_id) return &c;
  }
  return nullptr;
}

ApBreakdown ap_per_class(const GroundTruthSet& gt, const DetectionSet& dets, const EvalConfig& cfg) {
  if (cfg.thresholds.empty()) throw DataError("at least one IoU threshold is required");
  for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
    check_threshold(cfg.thresholds[i]);
    if (i > 0 && cfg.thresholds[i] <= cfg.thresholds[i - 1]) throw DataError("IoU thresholds must be ascending");
  }
  MatchOptions mo;
  mo.kind = cfg.kind;
  mo.ignore_overlap = cfg.ignore_overlap;
  mo.min_gt_area = cfg.min_gt_area;

  using Cell = std::pair<std::string, int>;
  std::map<Cell, std::vector<const GtInstance*>> gt_cells;
  std::map<Cell, std::vector<const Detection*>> det_cells;
  for (const auto& g : gt.instances) gt_cells[{g.image_id, g.class_id}].push_back(&g);

  ApBreakdown out;
  out.thresholds = cfg.thresholds;
  out.kind = cfg.kind;
  for (const auto& d : dets.detections) {
    if (!gt.find_image(d.image_id)) {
      ++out.skipped_detections;
      continue;
    }
    det_cells[{d.image_id, d.class_id}].push_back(&d);
  }

  const std::size_t nt = cfg.thresholds.size();
  for (const auto& entry : gt.classes.entries()) {
    ClassAp ca;
    ca.class_id = entry.id;
    ca.name = entry.name;

    std::vector<OverlapTable> tables;
    std::set<std::string> images;
    for (const auto& [cell, v] : gt_cells) {
      if (cell.second == entry.id) images.insert(cell.first);
    }
    for (const auto& [cell, v] : det_cells) {
      if (cell.second == entry.id) images.insert(cell.first);
    }
    static const std::vector<const GtInstance*> kNoGt;
    static const std::vector<const Detection*> kNoDet;
    for (const auto& image : images) {
      const auto git = gt_cells.find({image, entry.id});
      const auto dit = det_cells.find({image, entry.id});
      const auto& g = git == gt_cells.end() ? kNoGt : git->second;
      const auto& d = dit == det_cells.end() ? kNoDet : dit->second;
      tables.push_back(build_table(
          d.size(), g.size(), [&](std::size_t i) -> const Detection& { return *d[i]; },
          [&](std::size_t i) -> const GtInstance& { return *g[i]; }, mo));
      ca.n_instances += tables.back().n_effective;
    }

    ca.present = ca.n_instances > 0;
    if (ca.present) {
      for (std::size_t ti = 0; ti < nt; ++ti) {
        std::vector<MatchResult> results;
        results.reserve(tables.size());
        for (const auto& t : tables) results.push_back(match_table(t, cfg.thresholds[ti]));
        const double ap = *average_precision(results, ca.n_instances);
        ca.ap_per_threshold.push_back(ap);
      }
      ca.ap = compensated_sum(ca.ap_per_threshold) / static_cast<double>(nt);
    }
    out.classes.push_back(std::move(ca));
  }
  return out;
}

ClassWeights class_weights(const GroundTruthSet& gt, WeightMode mode, double min_gt_area, IouKind kind) {
  MatchOptions mo;
  mo.min_gt_area = min_gt_area;
  mo.kind = kind;
  std::map<int, double> counts;
  std::set<std::pair<std::string, int>> seen;
  for (const auto& g : gt.instances) {
    if (effectively_ignored(g, mo)) continue;
    if (mode == WeightMode::images && !seen.insert({g.image_id, g.class_id}).second) continue;
    counts[g.class_id] += 1.0;
  }
  double total = 0.0;
  for (const auto& [c, n] : counts) total += n;
  if (total == 0.0) throw DataError("class weights need at least one non-ignored ground-truth instance");
  ClassWeights w;
  for (const auto& [c, n] : counts) w[c] = n / total;
  return w;
}

double weighted_ap(const ApBreakdown& breakdown, const ClassWeights& weights) {
  // Numerator and denominator carried as unevaluated double-double sums
  // (error-free products via fma), then one corrected division.
  double nh = 0.0, nl = 0.0, dh = 0.0, dl = 0.0;
  auto accumulate = [](double& hi, double& lo, double x) {
    const double t = hi + x;
    const double z = t - hi;
    lo += (hi - (t - z)) + (x - z);
    hi = t;
  };
  for (const auto& c : breakdown.classes) {
    if (!c.present) continue;
    const auto it = weights.find(c.class_id);
    if (it == weights.end()) throw DataError("no weight for present class '" + c.name + "'");
    const double p = it->second * c.ap;
    accumulate(nh, nl, p);
    nl += std::fma(it->second, c.ap, -p);
    accumulate(dh, dl, it->second);
  }
  if (dh + dl <= 0.0) throw DataError("weighted AP needs at least one present class with positive weight");
  const double q = nh / dh;
  const double r = std::fma(-q, dh, nh) + nl - q * dl;
  return q + r / dh;
}

std::string_view to_string(IouKind k) { return k == IouKind::box ? "box" : "mask"; }

IouKind iou_kind_from_string(std::string_view s) {
  if (s == "box" || s == "bbox") return IouKind::box;
  if (s == "mask" || s == "segm") return IouKind::mask;
  throw DataError("unknown IoU kind '" + std::string(s) + "'");
}

std::string_view to_string(WeightMode m) { return m == WeightMode::instances ? "instances" : "images"; }

WeightMode weight_mode_from_string(std::string_view s) {
  if (s == "instances") return WeightMode::instances;
  if (s == "images") return WeightMode::images;
  throw DataError("unknown weight mode '" + std::string(s) + "'");
}

json metrics_to_json(const ApBreakdown& b, const ClassWeights& weights, double wap, const EvalConfig& cfg) {
  json classes = json::array();
  for (const auto& c : b.classes) {
    json jc{{"id", c.class_id}, {"name", c.name}, {"present", c.present}, {"n_instances", c.n_instances}};
    if (c.present) {
      jc["ap"] = c.ap;
      jc["ap_per_threshold"] = c.ap_per_threshold;
    } else {
      jc["ap"] = nullptr;
    }
    const auto it = weights.find(c.class_id);
    jc["weight"] = it == weights.end() ? 0.0 : it->second;
    classes.push_back(std::move(jc));
  }
  return {{"kind", to_string(b.kind)},
          {"interpolation", "all_point"},
          {"iou_thresholds", b.thresholds},
          {"weight_mode", to_string(cfg.weight_mode)},
          {"min_gt_area", cfg.min_gt_area},
          {"ignore_overlap", cfg.ignore_overlap == IgnoreOverlap::iou ? "iou" : "detection_area"},
          {"classes", classes},
          {"weighted_ap", wap},
          {"skipped_detections", b.skipped_detections}};
}

}  // namespace vcmbench
