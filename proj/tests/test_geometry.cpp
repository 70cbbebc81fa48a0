#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vcmbench/error.hpp"
#include "vcmbench/geometry.hpp"
#include "vcmbench/selftest.hpp"

using namespace vcmbench;

TEST_CASE("bbox_iou") {
  CHECK(bbox_iou({1, 2, 3, 4}, {1, 2, 3, 4}) == 1.0);
  CHECK(bbox_iou({0, 0, 1, 1}, {5, 5, 1, 1}) == 0.0);
  CHECK(bbox_iou({0, 0, 1, 1}, {0.5, 0, 1, 1}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(bbox_iou({0, 0, 1, 1}, {1, 0, 1, 1}) == 0.0);  // touching edges
  CHECK(bbox_iou({0, 0, 0, 0}, {0, 0, 0, 0}) == 0.0);
}

TEST_CASE("rle of constant masks") {
  Bitmask zeros(4, 4);
  CHECK(rle_encode(zeros).counts == std::vector<std::uint32_t>{16});
  Bitmask ones(4, 4);
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) ones.set(x, y);
  }
  CHECK(rle_encode(ones).counts == std::vector<std::uint32_t>{0, 16});
  CHECK(rle_decode(rle_encode(ones)) == ones);
}

TEST_CASE("rle is column major") {
  Bitmask m(2, 3);
  m.set(1, 0);  // first pixel of the second column
  const RleMask r = rle_encode(m);
  CHECK(r.counts == std::vector<std::uint32_t>{3, 1, 2});
  CHECK(r.area() == 1);
}

TEST_CASE("rle round trip on random 8x8 masks") {
  SplitMix64 rng(11);
  for (int i = 0; i < 200; ++i) {
    Bitmask m(8, 8);
    for (int x = 0; x < 8; ++x) {
      for (int y = 0; y < 8; ++y) m.set(x, y, rng.uniform() < 0.4);
    }
    const RleMask r = rle_encode(m);
    CHECK_NOTHROW(validate_rle(r));
    CHECK(rle_decode(r) == m);
    CHECK(r.area() == m.count());
  }
}

TEST_CASE("validate_rle rejects malformed counts") {
  CHECK_THROWS_AS(validate_rle({2, 2, {3}}), DataError);
  CHECK_THROWS_AS(validate_rle({2, 2, {1, 0, 3}}), DataError);
  CHECK_NOTHROW(validate_rle({2, 2, {0, 4}}));
}

TEST_CASE("mask_iou") {
  Bitmask a(4, 4), b(4, 4);
  a.set(0, 0);
  a.set(1, 1);
  b.set(3, 3);
  const RleMask ra = rle_encode(a), rb = rle_encode(b);
  CHECK(mask_iou(ra, ra) == 1.0);
  CHECK(mask_iou(ra, rb) == 0.0);
  CHECK(mask_iou(rle_encode(Bitmask(4, 4)), rle_encode(Bitmask(4, 4))) == 0.0);
  CHECK_THROWS_AS(mask_iou(ra, rle_encode(Bitmask(4, 5))), DataError);
}

TEST_CASE("mask_iou equals the bitmap oracle") {
  SplitMix64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const int w = rng.integer(1, 12), h = rng.integer(1, 12);
    Bitmask a(w, h), b(w, h);
    oracle::Grid ga{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w * h))}, gb = ga;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool va = rng.uniform() < 0.5, vb = rng.uniform() < 0.5;
        a.set(x, y, va);
        b.set(x, y, vb);
        ga.bits[static_cast<std::size_t>(y * w + x)] = va;
        gb.bits[static_cast<std::size_t>(y * w + x)] = vb;
      }
    }
    CHECK(mask_iou(rle_encode(a), rle_encode(b)) == oracle::grid_iou(ga, gb));
  }
}

TEST_CASE("rasterize_polygon") {
  const Polygon rect{{0, 0}, {10, 0}, {10, 5}, {0, 5}};
  const auto r = rasterize_polygon(rect, 20, 20);
  CHECK(r.mask.area() == 50);
  CHECK(r.warnings.empty());
  CHECK(mask_bbox(r.mask) == BBox{0, 0, 10, 5});

  const Polygon tri{{0, 0}, {4, 0}, {0, 4}};
  const auto t = rasterize_polygon(tri, 8, 8);
  const auto want = oracle::rasterize({{0, 0}, {4, 0}, {0, 4}}, 8, 8);
  long n = 0;
  for (auto b : want.bits) n += b;
  CHECK(t.mask.area() == static_cast<std::uint64_t>(n));
  CHECK(n == 6);

  const Polygon line{{0, 0}, {2, 2}, {5, 5}};
  const auto c = rasterize_polygon(line, 8, 8);
  CHECK(c.mask.area() == 0);
  REQUIRE(c.warnings.size() == 1);
  CHECK(c.warnings[0].find("degenerate") != std::string::npos);
}

TEST_CASE("rasterize_polygon clips to the image and keeps orientation irrelevant") {
  const Polygon big{{-5, -5}, {50, -5}, {50, 50}, {-5, 50}};
  CHECK(rasterize_polygon(big, 6, 4).mask.area() == 24);
  const Polygon cw{{0, 0}, {0, 5}, {10, 5}, {10, 0}};
  CHECK(rasterize_polygon(cw, 20, 20).mask.area() == 50);
}

TEST_CASE("rasterize_polygons uses even-odd across rings") {
  const Polygon outer{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  const Polygon hole{{2, 2}, {6, 2}, {6, 6}, {2, 6}};
  const std::vector<Polygon> rings{outer, hole};
  CHECK(rasterize_polygons(rings, 12, 12).mask.area() == 100 - 16);
}

TEST_CASE("rasterization agrees with the point-in-polygon oracle on random polygons") {
  SplitMix64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const int n = rng.integer(3, 8);
    Polygon poly;
    std::vector<oracle::P> op;
    for (int k = 0; k < n; ++k) {
      const double x = rng.uniform(-2, 18), y = rng.uniform(-2, 14);
      poly.push_back({x, y});
      op.push_back({x, y});
    }
    const auto got = rasterize_polygon(poly, 16, 12);
    if (!got.warnings.empty()) continue;
    const Bitmask bits = rle_decode(got.mask);
    const auto want = oracle::rasterize(op, 16, 12);
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 16; ++x) REQUIRE(bits.at(x, y) == want.at(x, y));
    }
  }
}

TEST_CASE("polygon_signed_area") {
  const Polygon ccw{{0, 0}, {4, 0}, {4, 3}, {0, 3}};
  CHECK(std::abs(polygon_signed_area(ccw)) == 12.0);
}
