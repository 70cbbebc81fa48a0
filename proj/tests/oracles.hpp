#pragma once

// Reference implementations used only by the tests. Each one is written the
// slow, obvious way and shares no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

// Integer box: x, y, w, h in pixels.
struct IBox {
  int x = 0, y = 0, w = 0, h = 0;
};

inline double box_iou(const IBox& a, const IBox& b) {
  long inter = 0;
  for (int y = std::max(a.y, b.y); y < std::min(a.y + a.h, b.y + b.h); ++y) {
    for (int x = std::max(a.x, b.x); x < std::min(a.x + a.w, b.x + b.w); ++x) ++inter;
  }
  const long uni = static_cast<long>(a.w) * a.h + static_cast<long>(b.w) * b.h - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

// --- detection matching ------------------------------------------------------

struct Det {
  IBox box;
  double score = 0.0;
};

struct Gt {
  IBox box;
  bool ignore = false;
};

enum class Flag { tp, fp, ignored };

// Scored flags of one scene, in rank order (score desc, then input order).
struct Ranked {
  double score;
  int order;
  Flag flag;
};

// Tries every partial one-to-one assignment of detections to non-ignored GT
// and keeps the one whose per-rank keys (matched, iou, -gt index) are
// lexicographically largest.
inline std::vector<Ranked> brute_force_match(const std::vector<Det>& dets, const std::vector<Gt>& gts, double thr,
                                             int order_base = 0) {
  const int nd = static_cast<int>(dets.size());
  const int ng = static_cast<int>(gts.size());
  std::vector<int> rank(static_cast<std::size_t>(nd));
  for (int i = 0; i < nd; ++i) rank[static_cast<std::size_t>(i)] = i;
  std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) { return dets[a].score > dets[b].score; });

  std::vector<double> iou(static_cast<std::size_t>(nd * ng));
  for (int d = 0; d < nd; ++d) {
    for (int g = 0; g < ng; ++g) iou[static_cast<std::size_t>(d * ng + g)] = box_iou(dets[d].box, gts[g].box);
  }

  using Key = std::vector<std::array<double, 3>>;
  Key best_key, key(static_cast<std::size_t>(nd));
  std::vector<int> best_assign;
  std::vector<int> assign(static_cast<std::size_t>(nd), -1);
  std::vector<bool> used(static_cast<std::size_t>(ng), false);

  std::function<void(int)> rec = [&](int k) {
    if (k == nd) {
      for (int i = 0; i < nd; ++i) {
        const int r = rank[static_cast<std::size_t>(i)];
        const int g = assign[static_cast<std::size_t>(r)];
        key[static_cast<std::size_t>(i)] = g < 0 ? std::array<double, 3>{0.0, 0.0, 0.0}
                                                 : std::array<double, 3>{1.0, iou[static_cast<std::size_t>(r * ng + g)],
                                                                         -static_cast<double>(g)};
      }
      if (best_assign.empty() || key > best_key) {
        best_key = key;
        best_assign = assign;
      }
      return;
    }
    const int d = rank[static_cast<std::size_t>(k)];
    assign[static_cast<std::size_t>(d)] = -1;
    rec(k + 1);
    for (int g = 0; g < ng; ++g) {
      if (gts[g].ignore || used[g]) continue;
      if (iou[static_cast<std::size_t>(d * ng + g)] < thr) continue;
      used[g] = true;
      assign[static_cast<std::size_t>(d)] = g;
      rec(k + 1);
      used[g] = false;
      assign[static_cast<std::size_t>(d)] = -1;
    }
  };
  rec(0);
  if (nd == 0) best_assign.clear();

  std::vector<Ranked> out;
  for (int r : rank) {
    Flag f = Flag::fp;
    if (best_assign[static_cast<std::size_t>(r)] >= 0) {
      f = Flag::tp;
    } else {
      for (const auto& g : gts) {
        if (g.ignore && box_iou(dets[r].box, g.box) >= thr) f = Flag::ignored;
      }
    }
    out.push_back({dets[r].score, order_base + r, f});
  }
  return out;
}

// Area under the monotone precision envelope, one recall step per TP.
inline double average_precision(std::vector<Ranked> ranked, std::size_t n_gt) {
  std::vector<Ranked> kept;
  for (const auto& r : ranked) {
    if (r.flag != Flag::ignored) kept.push_back(r);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.order < b.order;
  });
  std::vector<double> prec;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (kept[k].flag == Flag::tp) ++tp;
    prec.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (kept[k].flag != Flag::tp) continue;
    double env = 0.0;
    for (std::size_t j = k; j < kept.size(); ++j) env = std::max(env, prec[j]);
    sum += env;
  }
  return sum / static_cast<double>(n_gt);
}

// --- masks and polygons ------------------------------------------------------

// Row-major bit grid.
struct Grid {
  int w = 0, h = 0;
  std::vector<std::uint8_t> bits;
  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * w + x] != 0; }
};

inline double grid_iou(const Grid& a, const Grid& b) {
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += (a.bits[i] && b.bits[i]);
    uni += (a.bits[i] || b.bits[i]);
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

struct P {
  double x, y;
};

// Even-odd test of the pixel center against every edge, counting crossings
// of the vertical ray going down from the center.
inline bool center_inside(const std::vector<P>& poly, int px, int py) {
  const double cx = px + 0.5, cy = py + 0.5;
  bool inside = false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const P& p = poly[i];
    const P& q = poly[(i + 1) % poly.size()];
    if ((p.x > cx) != (q.x > cx)) {
      const double y = p.y + (cx - p.x) * (q.y - p.y) / (q.x - p.x);
      if (y > cy) inside = !inside;
    }
  }
  return inside;
}

inline Grid rasterize(const std::vector<P>& poly, int w, int h) {
  Grid g{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) g.bits[static_cast<std::size_t>(y) * w + x] = center_inside(poly, x, y);
  }
  return g;
}

// --- image quality -----------------------------------------------------------

inline double psnr(const std::vector<std::vector<int>>& a, const std::vector<std::vector<int>>& b, int bit_depth) {
  double sse = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      const double d = a[r][c] - b[r][c];
      sse += d * d;
      ++n;
    }
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = std::pow(2.0, bit_depth) - 1.0;
  return 10.0 * std::log10(peak * peak / (sse / static_cast<double>(n)));
}

// --- Bjontegaard -------------------------------------------------------------

// Lagrange form of the cubic through four points.
inline double lagrange(const std::array<double, 4>& xs, const std::array<double, 4>& ys, double x) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    double l = 1.0;
    for (int j = 0; j < 4; ++j) {
      if (j != i) l *= (x - xs[j]) / (xs[i] - xs[j]);
    }
    s += ys[i] * l;
  }
  return s;
}

inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

struct Curve {
  std::array<double, 4> rate;    // bits per pixel
  std::array<double, 4> metric;  // in [0, 1]
};

// Mean metric difference over the common log-rate range, in percentage points.
inline double bd_metric(const Curve& anchor, const Curve& test, int samples = 100000) {
  std::array<double, 4> la, lt;
  for (int i = 0; i < 4; ++i) {
    la[i] = std::log10(anchor.rate[i]);
    lt[i] = std::log10(test.rate[i]);
  }
  const double lo = std::max(*std::min_element(la.begin(), la.end()), *std::min_element(lt.begin(), lt.end()));
  const double hi = std::min(*std::max_element(la.begin(), la.end()), *std::max_element(lt.begin(), lt.end()));
  const double d = trapezoid([&](double x) { return lagrange(lt, test.metric, x) - lagrange(la, anchor.metric, x); },
                             lo, hi, samples);
  return 100.0 * d / (hi - lo);
}

// Mean rate change over the common metric range, in percent.
inline double bd_rate(const Curve& anchor, const Curve& test, int samples = 100000) {
  std::array<double, 4> la, lt;
  for (int i = 0; i < 4; ++i) {
    la[i] = std::log10(anchor.rate[i]);
    lt[i] = std::log10(test.rate[i]);
  }
  const auto& ma = anchor.metric;
  const auto& mt = test.metric;
  const double lo = std::max(*std::min_element(ma.begin(), ma.end()), *std::min_element(mt.begin(), mt.end()));
  const double hi = std::min(*std::max_element(ma.begin(), ma.end()), *std::max_element(mt.begin(), mt.end()));
  const double d =
      trapezoid([&](double m) { return lagrange(mt, lt, m) - lagrange(ma, la, m); }, lo, hi, samples) / (hi - lo);
  return (std::pow(10.0, d) - 1.0) * 100.0;
}

// --- weighted AP -------------------------------------------------------------

inline double weighted_mean(const std::vector<double>& values, const std::vector<double>& weights) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += values[i] * weights[i];
    den += weights[i];
  }
  return num / den;
}

}  // namespace oracle
