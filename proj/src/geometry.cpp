#include "vcmbench/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vcmbench/error.hpp"

namespace vcmbench {

Bitmask::Bitmask(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DataError("bitmask dimensions must be positive");
  bits.assign(static_cast<std::size_t>(w) * h, 0);
}

std::uint64_t Bitmask::count() const {
  return static_cast<std::uint64_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::uint64_t RleMask::area() const {
  std::uint64_t a = 0;
  for (std::size_t i = 1; i < counts.size(); i += 2) a += counts[i];
  return a;
}

void validate_rle(const RleMask& m) {
  if (m.width <= 0 || m.height <= 0) throw DataError("malformed mask: non-positive extent");
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < m.counts.size(); ++i) {
    if (i > 0 && m.counts[i] == 0) {
      throw DataError("malformed mask: zero-length run at position " + std::to_string(i));
    }
    total += m.counts[i];
  }
  const auto expected = static_cast<std::uint64_t>(m.width) * static_cast<std::uint64_t>(m.height);
  if (total != expected) {
    throw DataError("malformed mask: counts sum to " + std::to_string(total) + ", expected " +
                    std::to_string(expected));
  }
}

double bbox_intersection(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double bbox_iou(const BBox& a, const BBox& b) {
  const double inter = bbox_intersection(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

RleMask rle_encode(const Bitmask& mask) {
  if (mask.width <= 0 || mask.height <= 0) throw DataError("bitmask dimensions must be positive");
  RleMask out{mask.width, mask.height, {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t b : mask.bits) {
    const std::uint8_t v = b ? 1 : 0;
    if (v != current) {
      out.counts.push_back(run);
      run = 0;
      current = v;
    }
    ++run;
  }
  out.counts.push_back(run);
  return out;
}

Bitmask rle_decode(const RleMask& rle) {
  validate_rle(rle);
  Bitmask out(rle.width, rle.height);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    if (i % 2 == 1) std::fill_n(out.bits.begin() + static_cast<std::ptrdiff_t>(pos), rle.counts[i], 1);
    pos += rle.counts[i];
  }
  return out;
}

MaskOverlap mask_overlap(const RleMask& a, const RleMask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw DataError("mask extent mismatch: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                    " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  }
  MaskOverlap r;
  std::size_t i = 0, j = 0;
  std::uint64_t ra = a.counts.empty() ? 0 : a.counts[0];
  std::uint64_t rb = b.counts.empty() ? 0 : b.counts[0];
  bool va = false, vb = false;
  const std::size_t na = a.counts.size(), nb = b.counts.size();
  while (i < na && j < nb) {
    if (ra == 0) {
      if (++i < na) { ra = a.counts[i]; va = !va; }
      continue;
    }
    if (rb == 0) {
      if (++j < nb) { rb = b.counts[j]; vb = !vb; }
      continue;
    }
    const std::uint64_t step = std::min(ra, rb);
    if (va && vb) r.intersection += step;
    if (va || vb) r.uni += step;
    ra -= step;
    rb -= step;
  }
  // Lengths are equal for valid masks; trailing runs of the longer list only
  // occur for malformed input, which the callers validate.
  return r;
}

double mask_iou(const RleMask& a, const RleMask& b) {
  const MaskOverlap o = mask_overlap(a, b);
  if (o.uni == 0) return 0.0;
  return static_cast<double>(o.intersection) / static_cast<double>(o.uni);
}

BBox mask_bbox(const RleMask& m) {
  const auto h = static_cast<std::uint64_t>(m.height);
  std::uint64_t pos = 0;
  std::uint64_t xmin = UINT64_MAX, xmax = 0, ymin = UINT64_MAX, ymax = 0;
  bool any = false;
  for (std::size_t i = 0; i < m.counts.size(); ++i) {
    const std::uint64_t len = m.counts[i];
    if (i % 2 == 1 && len > 0) {
      any = true;
      const std::uint64_t first = pos, last = pos + len - 1;
      const std::uint64_t x0 = first / h, x1 = last / h;
      xmin = std::min(xmin, x0);
      xmax = std::max(xmax, x1);
      if (x0 == x1) {
        ymin = std::min(ymin, first % h);
        ymax = std::max(ymax, last % h);
      } else {
        ymin = 0;
        ymax = h - 1;
      }
    }
    pos += len;
  }
  if (!any) return {};
  return {static_cast<double>(xmin), static_cast<double>(ymin), static_cast<double>(xmax - xmin + 1),
          static_cast<double>(ymax - ymin + 1)};
}

double polygon_signed_area(std::span<const Point> v) {
  double a = 0.0;
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

namespace {

// Rows whose center lies below an odd number of edge crossings are inside.
// The crossing expression must stay in sync with the one used by callers
// that test single points.
void collect_crossings(std::span<const Polygon> rings, double cx, std::vector<double>& out) {
  out.clear();
  for (const Polygon& ring : rings) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& p = ring[i];
      const Point& q = ring[(i + 1) % n];
      if ((p.x > cx) != (q.x > cx)) {
        out.push_back(p.y + (cx - p.x) * (q.y - p.y) / (q.x - p.x));
      }
    }
  }
  std::sort(out.begin(), out.end());
}

bool is_collinear(const Polygon& ring) {
  const Point& a = ring[0];
  for (std::size_t i = 1; i + 1 < ring.size(); ++i) {
    const Point& b = ring[i];
    const Point& c = ring[i + 1];
    if ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x) != 0.0) return false;
  }
  return true;
}

}  // namespace

RasterResult rasterize_polygons(std::span<const Polygon> rings, int width, int height) {
  if (width <= 0 || height <= 0) throw DataError("raster extent must be positive");
  RasterResult res;
  bool degenerate = true;
  for (const Polygon& ring : rings) {
    if (ring.size() < 3) throw DataError("polygon needs at least 3 vertices");
    if (!is_collinear(ring)) degenerate = false;
  }
  res.mask = RleMask{width, height, {}};
  auto& counts = res.mask.counts;
  if (degenerate) {
    res.warnings.emplace_back("degenerate polygon (zero area); mask is empty");
    counts.push_back(static_cast<std::uint32_t>(width) * static_cast<std::uint32_t>(height));
    return res;
  }

  bool current = false;
  std::uint32_t run = 0;
  std::vector<double> crossings;
  for (int x = 0; x < width; ++x) {
    collect_crossings(rings, x + 0.5, crossings);
    std::size_t k = 0;
    for (int y = 0; y < height; ++y) {
      const double cy = y + 0.5;
      while (k < crossings.size() && crossings[k] <= cy) ++k;
      const bool inside = ((crossings.size() - k) % 2) == 1;
      if (inside != current) {
        counts.push_back(run);
        run = 0;
        current = inside;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return res;
}

RasterResult rasterize_polygon(std::span<const Point> vertices, int width, int height) {
  const Polygon ring(vertices.begin(), vertices.end());
  return rasterize_polygons(std::span<const Polygon>(&ring, 1), width, height);
}

}  // namespace vcmbench
