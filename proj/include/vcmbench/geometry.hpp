#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vcmbench {

// Axis-aligned box in floating-point pixels, top-left origin.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  bool operator==(const BBox&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

using Polygon = std::vector<Point>;

// Dense binary mask, column-major (pixel (x, y) lives at x * height + y).
struct Bitmask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Bitmask() = default;
  Bitmask(int w, int h);

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(x) * height + y] != 0; }
  void set(int x, int y, bool v = true) {
    bits[static_cast<std::size_t>(x) * height + y] = v ? 1 : 0;
  }
  std::uint64_t count() const;
  bool operator==(const Bitmask&) const = default;
};

// Run-length encoded binary mask. Runs alternate zeros/ones in column-major
// order and always start with a (possibly empty) run of zeros.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> counts;

  std::uint64_t area() const;
  bool operator==(const RleMask&) const = default;
};

// Throws DataError if counts do not describe a width x height mask or if a
// zero-length run appears anywhere but the first position.
void validate_rle(const RleMask& m);

double bbox_iou(const BBox& a, const BBox& b);
double bbox_intersection(const BBox& a, const BBox& b);

RleMask rle_encode(const Bitmask& mask);
Bitmask rle_decode(const RleMask& rle);

// Intersection and union areas computed by merging the two run lists.
struct MaskOverlap {
  std::uint64_t intersection = 0;
  std::uint64_t uni = 0;
};
MaskOverlap mask_overlap(const RleMask& a, const RleMask& b);
double mask_iou(const RleMask& a, const RleMask& b);

// Tight bounding box of the set pixels; zero box for an empty mask.
BBox mask_bbox(const RleMask& m);

struct RasterResult {
  RleMask mask;
  std::vector<std::string> warnings;
};

// Even-odd fill, a pixel is inside iff its center (x + 0.5, y + 0.5) is.
// Multiple rings are combined with the even-odd rule as well.
RasterResult rasterize_polygon(std::span<const Point> vertices, int width, int height);
RasterResult rasterize_polygons(std::span<const Polygon> rings, int width, int height);

double polygon_signed_area(std::span<const Point> vertices);

}  // namespace vcmbench
