#include "vcmbench/bd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vcmbench/error.hpp"

namespace vcmbench {

namespace {

double horner(const std::array<double, 4>& c, double t) { return ((c[3] * t + c[2]) * t + c[1]) * t + c[0]; }

// Antiderivative of the cubic in t, zero at t = 0.
double antiderivative(const std::array<double, 4>& c, double t) {
  return (((c[3] / 4.0 * t + c[2] / 3.0) * t + c[1] / 2.0) * t + c[0]) * t;
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

PiecewiseCubic PiecewiseCubic::interpolate(std::span<const double> x, std::span<const double> y) {
  if (x.size() != 4 || y.size() != 4) throw DataError("cubic interpolation needs exactly 4 points");
  for (std::size_t i = 0; i < 4; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError("cubic interpolation: non-finite input");
    for (std::size_t j = i + 1; j < 4; ++j) {
      if (x[i] == x[j]) throw DataError("cubic interpolation: duplicate abscissa " + fmt_num(x[i]));
    }
  }
  Segment s;
  s.lo = *std::min_element(x.begin(), x.end());
  s.hi = *std::max_element(x.begin(), x.end());
  s.origin = 0.5 * (s.lo + s.hi);
  s.scale = 0.5 * (s.hi - s.lo);

  // Vandermonde system in normalized coordinates, partial pivoting.
  double a[4][5];
  for (int i = 0; i < 4; ++i) {
    const double t = (x[static_cast<std::size_t>(i)] - s.origin) / s.scale;
    double p = 1.0;
    for (int j = 0; j < 4; ++j) {
      a[i][j] = p;
      p *= t;
    }
    a[i][4] = y[static_cast<std::size_t>(i)];
  }
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-14) throw DataError("cubic interpolation: singular system (near-duplicate abscissae)");
    if (piv != col) {
      for (int j = 0; j < 5; ++j) std::swap(a[piv][j], a[col][j]);
    }
    for (int r = col + 1; r < 4; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int j = col; j < 5; ++j) a[r][j] -= f * a[col][j];
    }
  }
  for (int i = 3; i >= 0; --i) {
    double v = a[i][4];
    for (int j = i + 1; j < 4; ++j) v -= a[i][j] * s.coef[static_cast<std::size_t>(j)];
    s.coef[static_cast<std::size_t>(i)] = v / a[i][i];
  }
  for (double c : s.coef) {
    if (!std::isfinite(c)) throw DataError("cubic interpolation: non-finite fit");
  }
  PiecewiseCubic pc;
  pc.segments_.push_back(s);
  return pc;
}

PiecewiseCubic PiecewiseCubic::pchip(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DataError("PCHIP needs at least 2 points");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(x[i + 1] > x[i])) throw DataError("PCHIP: abscissae must be strictly increasing");
  }
  std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    delta[k] = (y[k + 1] - y[k]) / h[k];
  }
  auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
  if (n == 2) {
    d[0] = d[1] = delta[0];
  } else {
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (sign(delta[k - 1]) * sign(delta[k]) <= 0) {
        d[k] = 0.0;
      } else {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    auto edge = [&](double h0, double h1, double m0, double m1) {
      double v = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
      if (sign(v) != sign(m0)) {
        v = 0.0;
      } else if (sign(m0) != sign(m1) && std::abs(v) > 3.0 * std::abs(m0)) {
        v = 3.0 * m0;
      }
      return v;
    };
    d[0] = edge(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }
  PiecewiseCubic pc;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    Segment s;
    s.lo = x[k];
    s.hi = x[k + 1];
    s.origin = x[k];
    s.scale = h[k];
    const double y0 = y[k], y1 = y[k + 1], m0 = h[k] * d[k], m1 = h[k] * d[k + 1];
    s.coef = {y0, m0, 3.0 * (y1 - y0) - 2.0 * m0 - m1, 2.0 * (y0 - y1) + m0 + m1};
    pc.segments_.push_back(s);
  }
  return pc;
}

double PiecewiseCubic::operator()(double x) const {
  const Segment* seg = &segments_.front();
  for (const auto& s : segments_) {
    seg = &s;
    if (x <= s.hi) break;
  }
  return horner(seg->coef, (x - seg->origin) / seg->scale);
}

double PiecewiseCubic::integral(double a, double b) const {
  double total = 0.0;
  for (const auto& s : segments_) {
    const double lo = std::max(a, s.lo);
    const double hi = std::min(b, s.hi);
    if (hi <= lo) continue;
    const double ta = (lo - s.origin) / s.scale;
    const double tb = (hi - s.origin) / s.scale;
    total += s.scale * (antiderivative(s.coef, tb) - antiderivative(s.coef, ta));
  }
  return total;
}

std::vector<std::string> curve_violations(const RdCurve& curve) {
  std::vector<std::string> v;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i - 1];
    const auto& q = curve.points[i];
    if (!(q.bpp > p.bpp)) {
      v.push_back(curve.method + ": bitrate not increasing between QP " + fmt_num(p.quality_param) + " and QP " +
                  fmt_num(q.quality_param));
    }
    if (q.metric < p.metric) {
      v.push_back(curve.method + ": metric drops from " + fmt_num(p.metric) + " (QP " + fmt_num(p.quality_param) +
                  ") to " + fmt_num(q.metric) + " (QP " + fmt_num(q.quality_param) + ") as bitrate grows");
    }
  }
  return v;
}

std::span<const double> subset_qps(QpSubset subset) {
  return subset == QpSubset::standard ? std::span<const double>(kStandardQps) : std::span<const double>(kLowBitrateQps);
}

RdCurve select_qp_subset(const RdCurve& curve, std::span<const double> qps) {
  RdCurve out;
  out.method = curve.method;
  out.baseline_uncompressed = curve.baseline_uncompressed;
  std::vector<std::string> missing;
  for (double qp : qps) {
    const auto it = std::find_if(curve.points.begin(), curve.points.end(),
                                 [&](const RdPoint& p) { return p.quality_param == qp; });
    if (it == curve.points.end()) {
      missing.push_back(fmt_num(qp));
    } else {
      out.points.push_back(*it);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError(curve.method + ": missing QP " + list);
  }
  std::stable_sort(out.points.begin(), out.points.end(), [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  return out;
}

RdCurve select_qp_subset(const RdCurve& curve, QpSubset subset) { return select_qp_subset(curve, subset_qps(subset)); }

namespace {

void check_points(const RdCurve& c, Interpolation interp) {
  if (interp == Interpolation::cubic && c.points.size() != 4) {
    throw DataError(c.method + ": cubic Bjontegaard fit needs exactly 4 points, got " +
                    std::to_string(c.points.size()));
  }
  if (interp == Interpolation::pchip && c.points.size() < 4) {
    throw DataError(c.method + ": PCHIP Bjontegaard fit needs at least 4 points");
  }
  for (const auto& p : c.points) {
    if (!(p.bpp > 0.0) || !std::isfinite(p.bpp)) {
      throw DataError(c.method + ": non-positive rate at QP " + fmt_num(p.quality_param));
    }
    if (!std::isfinite(p.metric)) throw DataError(c.method + ": non-finite metric at QP " + fmt_num(p.quality_param));
  }
}

struct Samples {
  std::vector<double> x, y;
};

// Sorts by x; duplicate x is an error since the fit would be undefined.
Samples sorted_samples(std::vector<std::pair<double, double>> xy, const std::string& method, const char* axis) {
  std::sort(xy.begin(), xy.end());
  Samples s;
  for (std::size_t i = 0; i < xy.size(); ++i) {
    if (i > 0 && xy[i].first == xy[i - 1].first) {
      throw DataError(method + ": duplicate " + axis + " value " + fmt_num(xy[i].first) + " makes the fit non-finite");
    }
    s.x.push_back(xy[i].first);
    s.y.push_back(xy[i].second);
  }
  return s;
}

PiecewiseCubic fit(const Samples& s, Interpolation interp) {
  return interp == Interpolation::cubic ? PiecewiseCubic::interpolate(s.x, s.y) : PiecewiseCubic::pchip(s.x, s.y);
}

BdInterval overlap(const PiecewiseCubic& a, const PiecewiseCubic& b, const char* axis) {
  const BdInterval iv{std::max(a.lo(), b.lo()), std::min(a.hi(), b.hi())};
  if (!(iv.hi > iv.lo)) throw DataError(std::string("curves do not overlap in ") + axis);
  return iv;
}

void check_invertible(const RdCurve& c) {
  std::vector<RdPoint> pts = c.points;
  std::stable_sort(pts.begin(), pts.end(), [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  int direction = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double diff = pts[i].metric - pts[i - 1].metric;
    const int s = (diff > 0.0) - (diff < 0.0);
    if (s == 0 || (direction != 0 && s != direction)) {
      throw DataError(c.method + ": metric is not strictly monotone in rate at QP " + fmt_num(pts[i - 1].quality_param) +
                      " (" + fmt_num(pts[i - 1].metric) + ") and QP " + fmt_num(pts[i].quality_param) + " (" +
                      fmt_num(pts[i].metric) + ")");
    }
    direction = s;
  }
}

}  // namespace

BdValue bd_metric(const RdCurve& anchor, const RdCurve& test, Interpolation interp) {
  check_points(anchor, interp);
  check_points(test, interp);
  auto samples = [](const RdCurve& c) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : c.points) xy.emplace_back(std::log10(p.bpp), p.metric);
    return sorted_samples(std::move(xy), c.method, "rate");
  };
  const PiecewiseCubic fa = fit(samples(anchor), interp);
  const PiecewiseCubic ft = fit(samples(test), interp);
  const BdInterval iv = overlap(fa, ft, "log-rate");
  const double diff = (ft.integral(iv.lo, iv.hi) - fa.integral(iv.lo, iv.hi)) / (iv.hi - iv.lo);
  return {diff * 100.0, iv};
}

BdValue bd_rate(const RdCurve& anchor, const RdCurve& test, Interpolation interp) {
  check_points(anchor, interp);
  check_points(test, interp);
  check_invertible(anchor);
  check_invertible(test);
  auto samples = [](const RdCurve& c) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : c.points) xy.emplace_back(p.metric, std::log10(p.bpp));
    return sorted_samples(std::move(xy), c.method, "metric");
  };
  const PiecewiseCubic fa = fit(samples(anchor), interp);
  const PiecewiseCubic ft = fit(samples(test), interp);
  const BdInterval iv = overlap(fa, ft, "metric");
  const double diff = (ft.integral(iv.lo, iv.hi) - fa.integral(iv.lo, iv.hi)) / (iv.hi - iv.lo);
  return {(std::pow(10.0, diff) - 1.0) * 100.0, iv};
}

BdResult bjontegaard(const RdCurve& anchor, const RdCurve& test, QpSubset subset, Interpolation interp) {
  BdResult r;
  r.subset = subset;
  const auto qps = subset_qps(subset);
  r.qps.assign(qps.begin(), qps.end());
  const RdCurve a = select_qp_subset(anchor, qps);
  const RdCurve t = select_qp_subset(test, qps);
  try {
    const BdValue v = bd_metric(a, t, interp);
    r.bd_metric_pp = v.value;
    r.log_rate_interval = v.interval;
  } catch (const DataError& e) {
    r.diagnostics.push_back(std::string("BD metric: ") + e.what());
  }
  try {
    const BdValue v = bd_rate(a, t, interp);
    r.bd_rate_pct = v.value;
    r.metric_interval = v.interval;
  } catch (const DataError& e) {
    r.diagnostics.push_back(std::string("BD rate: ") + e.what());
  }
  return r;
}

std::string_view to_string(QpSubset s) { return s == QpSubset::standard ? "standard" : "low"; }

QpSubset qp_subset_from_string(std::string_view s) {
  if (s == "standard") return QpSubset::standard;
  if (s == "low" || s == "low_bitrate") return QpSubset::low_bitrate;
  throw DataError("unknown QP subset '" + std::string(s) + "'");
}

std::string_view to_string(Interpolation i) { return i == Interpolation::cubic ? "cubic" : "pchip"; }

Interpolation interpolation_from_string(std::string_view s) {
  if (s == "cubic") return Interpolation::cubic;
  if (s == "pchip") return Interpolation::pchip;
  throw DataError("unknown interpolation '" + std::string(s) + "'");
}

}  // namespace vcmbench
