#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcmbench/bd.hpp"
#include "vcmbench/detection_metrics.hpp"

namespace vcmbench {

// One scored (training method, QP) combination, materialized as a file so
// scoring and comparison can run on different machines.
struct EvaluationCell {
  std::string method;
  std::string detector = "default";
  std::optional<double> qp;  // nullopt: uncompressed input
  std::string detections_path;
  double weighted_ap = 0.0;
  std::optional<BitrateStats> bitrate;  // required for compressed cells
  nlohmann::json metrics = nlohmann::json::object();
};

nlohmann::json cell_to_json(const EvaluationCell& c);
EvaluationCell cell_from_json(const nlohmann::json& j);
EvaluationCell read_cell(const std::filesystem::path& path);
void write_cell(const std::filesystem::path& path, const EvaluationCell& c);

struct ScoreRequest {
  std::string method = "default";
  std::string detector = "default";
  std::optional<double> qp;
  std::optional<BitrateStats> bitrate;
  std::string detections_path;
  EvalConfig eval;
};

EvaluationCell score_cell(const GroundTruthSet& gt, const DetectionSet& dets, const ScoreRequest& req);

struct AssembledCurve {
  RdCurve curve;
  std::vector<std::string> flags;  // monotonicity violations, points retained
};

// Cells of a single method (and detector). Needs >= 4 distinct QPs; an
// uncompressed cell becomes the curve's baseline.
AssembledCurve assemble_rd_curve(std::span<const EvaluationCell> cells);

struct MethodComparison {
  std::string method;
  BdResult standard;
  BdResult low_bitrate;
};

struct DetectorComparison {
  std::string detector;
  std::string anchor;
  std::vector<RdCurve> curves;  // anchor first, then test methods in input order
  std::vector<MethodComparison> rows;
  std::vector<std::string> flags;
};

struct ComparisonReport {
  std::string anchor;
  Interpolation interpolation = Interpolation::cubic;
  std::vector<DetectorComparison> detectors;
  std::vector<std::string> methods;  // row order across detectors
};

DetectorComparison compare_methods(const RdCurve& anchor, std::span<const RdCurve> tests, std::string detector,
                                   Interpolation interp = Interpolation::cubic);

// Groups cells by detector and method, builds curves and compares every
// method against the anchor. Row and column order follow first appearance.
ComparisonReport compare_cells(std::span<const EvaluationCell> cells, const std::string& anchor,
                               Interpolation interp = Interpolation::cubic);

nlohmann::json report_to_json(const ComparisonReport& r);

enum class ReportFormat { markdown, csv, plotdata, json };

ReportFormat report_format_from_string(std::string_view s);
std::string render_markdown(const ComparisonReport& r);
std::string render_bd_table(const ComparisonReport& r, QpSubset subset, bool rate);
std::string render_csv(const ComparisonReport& r);
std::string render_plotdata(const ComparisonReport& r);

// Writes report.md / report.csv / plotdata.csv / report.json into out_dir and
// returns the written paths.
std::vector<std::filesystem::path> emit_report(const ComparisonReport& r, ReportFormat format,
                                               const std::filesystem::path& out_dir);

// Fixed-decimal helpers shared by all report formats.
std::string format_bd(double v);        // two decimals, no negative zero
std::string format_metric(double v);    // four decimals

}  // namespace vcmbench
