#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vcmbench/quality_metrics.hpp"

namespace vcmbench {

enum class Interpolation {
  cubic,  // single polynomial through exactly four points
  pchip,  // piecewise cubic Hermite (Fritsch-Carlson slopes), four or more points
};

enum class QpSubset { standard, low_bitrate };

inline constexpr std::array<double, 4> kStandardQps{22, 27, 32, 37};
inline constexpr std::array<double, 4> kLowBitrateQps{32, 37, 42, 47};
inline constexpr std::array<double, 6> kDefaultQpGrid{22, 27, 32, 37, 42, 47};

struct RdCurve {
  std::string method;
  std::vector<RdPoint> points;  // ascending bitrate
  std::optional<double> baseline_uncompressed;
};

// Non-increasing bitrates or a metric that drops as bitrate grows. Points
// are never modified.
std::vector<std::string> curve_violations(const RdCurve& curve);

RdCurve select_qp_subset(const RdCurve& curve, std::span<const double> qps);
RdCurve select_qp_subset(const RdCurve& curve, QpSubset subset);
std::span<const double> subset_qps(QpSubset subset);

// Piecewise cubic in normalized local coordinates. A plain cubic is a single
// segment spanning the whole data range.
class PiecewiseCubic {
 public:
  struct Segment {
    double lo = 0.0, hi = 0.0;        // domain in x
    double origin = 0.0, scale = 1.0;  // t = (x - origin) / scale
    std::array<double, 4> coef{};     // c0 + c1 t + c2 t^2 + c3 t^3
  };

  static PiecewiseCubic interpolate(std::span<const double> x, std::span<const double> y);
  static PiecewiseCubic pchip(std::span<const double> x, std::span<const double> y);

  double lo() const { return segments_.front().lo; }
  double hi() const { return segments_.back().hi; }
  double operator()(double x) const;
  // Closed-form integral over [a, b], which must lie inside [lo(), hi()].
  double integral(double a, double b) const;
  const std::vector<Segment>& segments() const { return segments_; }

 private:
  std::vector<Segment> segments_;
};

struct BdInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BdValue {
  double value = 0.0;
  BdInterval interval;  // integration interval (log10 rate for bd_metric, metric for bd_rate)
};

// Mean metric gain of `test` over `anchor` at equal rate, in percentage points.
BdValue bd_metric(const RdCurve& anchor, const RdCurve& test, Interpolation interp = Interpolation::cubic);
// Mean rate change of `test` at equal metric, in percent; negative = savings.
BdValue bd_rate(const RdCurve& anchor, const RdCurve& test, Interpolation interp = Interpolation::cubic);

struct BdResult {
  QpSubset subset = QpSubset::standard;
  std::vector<double> qps;
  std::optional<double> bd_metric_pp;
  std::optional<double> bd_rate_pct;
  BdInterval log_rate_interval;
  BdInterval metric_interval;
  std::vector<std::string> diagnostics;  // why a value is missing
};

// Selects the subset on both curves and computes both deltas. Failures of one
// delta are recorded in diagnostics instead of aborting the other.
BdResult bjontegaard(const RdCurve& anchor, const RdCurve& test, QpSubset subset,
                     Interpolation interp = Interpolation::cubic);

std::string_view to_string(QpSubset s);
QpSubset qp_subset_from_string(std::string_view s);
std::string_view to_string(Interpolation i);
Interpolation interpolation_from_string(std::string_view s);

}  // namespace vcmbench
