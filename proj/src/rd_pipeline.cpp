#include "vcmbench/rd_pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "vcmbench/codec_orchestrator.hpp"
#include "vcmbench/error.hpp"
#include "vcmbench/process.hpp"

namespace vcmbench {

namespace fs = std::filesystem;
using nlohmann::json;

json cell_to_json(const EvaluationCell& c) {
  json j{{"schema_version", 1},
         {"method", c.method},
         {"detector", c.detector},
         {"qp", c.qp ? json(*c.qp) : json(nullptr)},
         {"detections", c.detections_path},
         {"weighted_ap", c.weighted_ap},
         {"bitrate", nullptr},
         {"metrics", c.metrics}};
  if (c.bitrate) {
    j["bitrate"] = {{"mean_bpp", c.bitrate->mean_bpp},
                    {"mean_kbit_per_image", c.bitrate->mean_kbit_per_image},
                    {"n_images", c.bitrate->n_images}};
  }
  return j;
}

EvaluationCell cell_from_json(const json& j) {
  EvaluationCell c;
  try {
    c.method = j.at("method").get<std::string>();
    c.detector = j.value("detector", "default");
    if (j.contains("qp") && !j.at("qp").is_null()) c.qp = j.at("qp").get<double>();
    c.detections_path = j.value("detections", "");
    c.weighted_ap = j.at("weighted_ap").get<double>();
    if (j.contains("bitrate") && !j.at("bitrate").is_null()) {
      const auto& b = j.at("bitrate");
      c.bitrate = BitrateStats{b.at("mean_bpp").get<double>(), b.value("mean_kbit_per_image", 0.0),
                               b.value("n_images", std::size_t{0})};
    }
    c.metrics = j.value("metrics", json::object());
  } catch (const json::exception& e) {
    throw DataError(std::string("evaluation cell: ") + e.what());
  }
  if (!(c.weighted_ap >= 0.0 && c.weighted_ap <= 1.0)) throw DataError("evaluation cell: weighted AP outside [0,1]");
  return c;
}

EvaluationCell read_cell(const fs::path& path) {
  try {
    return cell_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw DataError("'" + path.string() + "': " + e.what());
  }
}

void write_cell(const fs::path& path, const EvaluationCell& c) { write_file_atomic(path, cell_to_json(c).dump(1) + "\n"); }

EvaluationCell score_cell(const GroundTruthSet& gt, const DetectionSet& dets, const ScoreRequest& req) {
  const ApBreakdown b = ap_per_class(gt, dets, req.eval);
  const ClassWeights w = class_weights(gt, req.eval.weight_mode, req.eval.min_gt_area, req.eval.kind);
  EvaluationCell c;
  c.method = req.method;
  c.detector = req.detector;
  c.qp = req.qp;
  c.bitrate = req.bitrate;
  c.detections_path = req.detections_path;
  c.weighted_ap = weighted_ap(b, w);
  c.metrics = metrics_to_json(b, w, c.weighted_ap, req.eval);
  return c;
}

AssembledCurve assemble_rd_curve(std::span<const EvaluationCell> cells) {
  AssembledCurve out;
  if (cells.empty()) throw DataError("no evaluation cells");
  out.curve.method = cells.front().method;
  std::set<double> seen;
  for (const auto& c : cells) {
    if (c.method != out.curve.method) throw DataError("cells of different methods passed to one curve");
    if (!c.qp) {
      if (out.curve.baseline_uncompressed) throw DataError(c.method + ": more than one uncompressed cell");
      out.curve.baseline_uncompressed = c.weighted_ap;
      continue;
    }
    if (!seen.insert(*c.qp).second) throw DataError(c.method + ": duplicate QP " + format_quality(*c.qp));
    if (!c.bitrate) throw DataError(c.method + ": cell at QP " + format_quality(*c.qp) + " has no bitrate");
    out.curve.points.push_back(
        {*c.qp, c.bitrate->mean_bpp, c.bitrate->mean_kbit_per_image, c.weighted_ap, c.bitrate->n_images});
  }
  if (out.curve.points.size() < 4) {
    throw DataError(out.curve.method + ": need at least 4 QPs, got " + std::to_string(out.curve.points.size()));
  }
  std::stable_sort(out.curve.points.begin(), out.curve.points.end(),
                   [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  out.flags = curve_violations(out.curve);
  return out;
}

namespace {

BdResult subset_result(const RdCurve& anchor, const RdCurve& test, QpSubset subset, Interpolation interp) {
  try {
    return bjontegaard(anchor, test, subset, interp);
  } catch (const DataError& e) {
    BdResult r;
    r.subset = subset;
    const auto q = subset_qps(subset);
    r.qps.assign(q.begin(), q.end());
    r.diagnostics.push_back(std::string("subset unavailable: ") + e.what());
    return r;
  }
}

}  // namespace

DetectorComparison compare_methods(const RdCurve& anchor, std::span<const RdCurve> tests, std::string detector,
                                   Interpolation interp) {
  DetectorComparison dc;
  dc.detector = std::move(detector);
  dc.anchor = anchor.method;
  dc.curves.push_back(anchor);
  for (const auto& f : curve_violations(anchor)) dc.flags.push_back(f);
  std::set<double> anchor_qps;
  for (const auto& p : anchor.points) anchor_qps.insert(p.quality_param);
  for (const auto& t : tests) {
    for (const auto& p : t.points) {
      if (!anchor_qps.count(p.quality_param)) {
        throw DataError("anchor '" + anchor.method + "' has no point at QP " + format_quality(p.quality_param) +
                        " used by '" + t.method + "'");
      }
    }
    dc.curves.push_back(t);
    for (const auto& f : curve_violations(t)) dc.flags.push_back(f);
    dc.rows.push_back({t.method, subset_result(anchor, t, QpSubset::standard, interp),
                       subset_result(anchor, t, QpSubset::low_bitrate, interp)});
  }
  return dc;
}

ComparisonReport compare_cells(std::span<const EvaluationCell> cells, const std::string& anchor, Interpolation interp) {
  ComparisonReport rep;
  rep.anchor = anchor;
  rep.interpolation = interp;
  std::vector<std::string> detectors;
  std::map<std::string, std::vector<std::string>> methods_of;
  std::map<std::pair<std::string, std::string>, std::vector<EvaluationCell>> groups;
  for (const auto& c : cells) {
    if (std::find(detectors.begin(), detectors.end(), c.detector) == detectors.end()) detectors.push_back(c.detector);
    auto& ms = methods_of[c.detector];
    if (std::find(ms.begin(), ms.end(), c.method) == ms.end()) ms.push_back(c.method);
    if (c.method != anchor && std::find(rep.methods.begin(), rep.methods.end(), c.method) == rep.methods.end()) {
      rep.methods.push_back(c.method);
    }
    groups[{c.detector, c.method}].push_back(c);
  }
  if (detectors.empty()) throw DataError("no evaluation cells");
  for (const auto& det : detectors) {
    const auto ait = groups.find({det, anchor});
    if (ait == groups.end()) throw DataError("anchor method '" + anchor + "' has no cells for detector '" + det + "'");
    const AssembledCurve a = assemble_rd_curve(ait->second);
    std::vector<RdCurve> tests;
    for (const auto& m : methods_of[det]) {
      if (m == anchor) continue;
      tests.push_back(assemble_rd_curve(groups[{det, m}]).curve);
    }
    rep.detectors.push_back(compare_methods(a.curve, tests, det, interp));
  }
  return rep;
}

namespace {

json interval_json(const BdInterval& iv) { return json::array({iv.lo, iv.hi}); }

json bd_json(const BdResult& r) {
  return {{"subset", to_string(r.subset)},
          {"qps", r.qps},
          {"bd_metric_pp", r.bd_metric_pp ? json(*r.bd_metric_pp) : json(nullptr)},
          {"bd_rate_pct", r.bd_rate_pct ? json(*r.bd_rate_pct) : json(nullptr)},
          {"log_rate_interval", interval_json(r.log_rate_interval)},
          {"metric_interval", interval_json(r.metric_interval)},
          {"diagnostics", r.diagnostics}};
}

}  // namespace

json report_to_json(const ComparisonReport& r) {
  json dets = json::array();
  for (const auto& d : r.detectors) {
    json curves = json::array();
    for (const auto& c : d.curves) {
      json pts = json::array();
      for (const auto& p : c.points) {
        pts.push_back({{"qp", p.quality_param},
                       {"bpp", p.bpp},
                       {"kbit_per_image", p.kbit_per_image},
                       {"weighted_ap", p.metric},
                       {"n_images", p.n_images}});
      }
      curves.push_back({{"method", c.method},
                        {"baseline_uncompressed", c.baseline_uncompressed ? json(*c.baseline_uncompressed) : json(nullptr)},
                        {"points", pts}});
    }
    json rows = json::array();
    for (const auto& row : d.rows) {
      rows.push_back({{"method", row.method}, {"standard", bd_json(row.standard)}, {"low_bitrate", bd_json(row.low_bitrate)}});
    }
    dets.push_back({{"detector", d.detector}, {"anchor", d.anchor}, {"curves", curves}, {"rows", rows}, {"flags", d.flags}});
  }
  return {{"schema_version", 1},
          {"anchor", r.anchor},
          {"interpolation", to_string(r.interpolation)},
          {"rate_unit", "bpp"},
          {"methods", r.methods},
          {"detectors", dets}};
}

}  // namespace vcmbench
