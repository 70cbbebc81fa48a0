#include <doctest.h>

#include "oracles.hpp"
#include "vcmbench/detection_metrics.hpp"
#include "vcmbench/error.hpp"
#include "vcmbench/selftest.hpp"

using namespace vcmbench;

namespace {

Detection det(BBox b, double score, std::size_t order = 0, int cls = 2, std::string image = "a") {
  Detection d;
  d.image_id = std::move(image);
  d.class_id = cls;
  d.bbox = b;
  d.score = score;
  d.order = order;
  return d;
}

GtInstance gt(BBox b, bool ignore = false, int cls = 2, std::string image = "a") {
  GtInstance g;
  g.image_id = std::move(image);
  g.class_id = cls;
  g.bbox = b;
  g.ignore = ignore;
  return g;
}

struct Builder {
  GroundTruthSet gt;
  DetectionSet dets;

  Builder() { gt.classes = ClassTable::road_users(); }
  void image(const std::string& id) { gt.images.push_back({id, 100, 100}); }
  void add(Detection d) {
    d.order = dets.detections.size();
    dets.by_image[d.image_id].push_back(dets.detections.size());
    dets.detections.push_back(std::move(d));
  }
};

}  // namespace

TEST_CASE("match_detections: single TP") {
  const std::vector<Detection> d{det({0, 0, 10, 10}, 0.9)};
  const std::vector<GtInstance> g{gt({0, 0, 10, 10})};
  const auto r = match_detections(d, g, {});
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].flag == MatchFlag::tp);
  CHECK(r.entries[0].gt == 0);
  CHECK(r.n_gt_effective == 1);
}

TEST_CASE("match_detections: one GT, two detections") {
  const std::vector<Detection> d{det({0, 0, 10, 10}, 0.8, 0), det({0, 0, 10, 10}, 0.9, 1)};
  const std::vector<GtInstance> g{gt({0, 0, 10, 10})};
  const auto r = match_detections(d, g, {});
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].detection == 1);
  CHECK(r.entries[0].flag == MatchFlag::tp);
  CHECK(r.entries[1].flag == MatchFlag::fp);
}

TEST_CASE("match_detections: threshold is inclusive and ignore regions absorb") {
  // IoU exactly 0.5.
  const std::vector<Detection> d{det({0, 0, 10, 10}, 0.9), det({50, 50, 10, 10}, 0.8, 1)};
  const std::vector<GtInstance> g{gt({0, 0, 10, 5}), gt({50, 50, 10, 10}, true)};
  const auto r = match_detections(d, g, {});
  CHECK(r.entries[0].flag == MatchFlag::tp);
  CHECK(r.entries[1].flag == MatchFlag::ignored);
  CHECK(r.n_gt_effective == 1);

  MatchOptions strict;
  strict.iou_threshold = 0.51;
  CHECK(match_detections(d, g, strict).entries[0].flag == MatchFlag::fp);
  strict.iou_threshold = 0.0;
  CHECK_THROWS_AS(match_detections(d, g, strict), DataError);
}

TEST_CASE("match_detections: detection-area overlap for ignore regions") {
  // Small detection inside a large crowd region: IoU is low, coverage is 1.
  const std::vector<Detection> d{det({10, 10, 5, 5}, 0.9)};
  const std::vector<GtInstance> g{gt({0, 0, 50, 50}, true)};
  CHECK(match_detections(d, g, {}).entries[0].flag == MatchFlag::fp);
  MatchOptions mo;
  mo.ignore_overlap = IgnoreOverlap::detection_area;
  CHECK(match_detections(d, g, mo).entries[0].flag == MatchFlag::ignored);
}

TEST_CASE("match_detections: min_gt_area turns small objects into ignore regions") {
  const std::vector<Detection> d{det({0, 0, 4, 4}, 0.9)};
  const std::vector<GtInstance> g{gt({0, 0, 4, 4})};
  MatchOptions mo;
  mo.min_gt_area = 20;
  const auto r = match_detections(d, g, mo);
  CHECK(r.n_gt_effective == 0);
  CHECK(r.entries[0].flag == MatchFlag::ignored);
}

TEST_CASE("match_detections: mixed scenes equal the exhaustive oracle") {
  SplitMix64 rng(21);
  for (int scene = 0; scene < 500; ++scene) {
    std::vector<oracle::Det> od;
    std::vector<oracle::Gt> og;
    std::vector<Detection> d;
    std::vector<GtInstance> g;
    const int ng = rng.integer(0, 4), nd = rng.integer(0, 6);
    for (int i = 0; i < ng; ++i) {
      oracle::IBox b{rng.integer(0, 6), rng.integer(0, 6), rng.integer(1, 4), rng.integer(1, 4)};
      og.push_back({b, rng.uniform() < 0.25});
      g.push_back(gt({double(b.x), double(b.y), double(b.w), double(b.h)}, og.back().ignore));
    }
    for (int i = 0; i < nd; ++i) {
      oracle::IBox b{rng.integer(0, 6), rng.integer(0, 6), rng.integer(1, 4), rng.integer(1, 4)};
      const double s = rng.integer(1, 3) / 4.0;
      od.push_back({b, s});
      d.push_back(det({double(b.x), double(b.y), double(b.w), double(b.h)}, s, static_cast<std::size_t>(i)));
    }
    const double thr = rng.integer(1, 9) / 10.0;
    MatchOptions mo;
    mo.iou_threshold = thr;
    const auto r = match_detections(d, g, mo);
    const auto want = oracle::brute_force_match(od, og, thr);
    REQUIRE(r.entries.size() == want.size());
    for (std::size_t k = 0; k < want.size(); ++k) {
      CHECK(static_cast<int>(r.entries[k].flag) == static_cast<int>(want[k].flag));
    }
  }
}

TEST_CASE("average_precision") {
  auto result = [](std::vector<MatchFlag> flags) {
    MatchResult r;
    double s = 1.0;
    std::size_t i = 0;
    for (auto f : flags) {
      MatchEntry e;
      e.flag = f;
      e.score = s;
      e.order = i++;
      s -= 0.1;
      r.entries.push_back(e);
    }
    return r;
  };
  const auto all = result({MatchFlag::tp, MatchFlag::tp});
  CHECK(*average_precision(std::span(&all, 1), 2) == 1.0);
  const auto none = result({});
  CHECK(*average_precision(std::span(&none, 1), 3) == 0.0);
  const auto mixed = result({MatchFlag::tp, MatchFlag::fp, MatchFlag::tp});
  CHECK(*average_precision(std::span(&mixed, 1), 2) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  const auto ignored = result({MatchFlag::tp, MatchFlag::ignored, MatchFlag::tp});
  CHECK(*average_precision(std::span(&ignored, 1), 2) == 1.0);
  CHECK(!average_precision(std::span(&all, 1), 0).has_value());
}

TEST_CASE("ap_per_class: perfect detector, absent classes, IoU 0.6 boxes") {
  Builder b;
  b.image("a");
  b.image("b");
  b.gt.instances = {gt({0, 0, 10, 10}, false, 2, "a"), gt({20, 20, 10, 10}, false, 2, "b"),
                    gt({40, 40, 10, 20}, false, 0, "b")};
  for (const auto& g : b.gt.instances) b.add(det(g.bbox, 0.9, 0, g.class_id, g.image_id));
  const auto perfect = ap_per_class(b.gt, b.dets);
  CHECK(perfect.find(2)->ap == 1.0);
  CHECK(perfect.find(0)->ap == 1.0);
  CHECK(!perfect.find(5)->present);
  CHECK(weighted_ap(perfect, class_weights(b.gt)) == 1.0);

  // Shifting a 10x10 box by 2.5 px gives IoU 75/125 = 0.6.
  Builder s;
  s.image("a");
  s.gt.instances = {gt({0, 0, 10, 10})};
  s.add(det({2.5, 0, 10, 10}, 0.9));
  const auto shifted = ap_per_class(s.gt, s.dets);
  const auto& ca = *shifted.find(2);
  int at_or_below = 0;
  for (double t : shifted.thresholds) at_or_below += t <= 0.6 + 1e-12;
  CHECK(at_or_below == 3);
  CHECK(ca.ap == doctest::Approx(3.0 / 10.0).epsilon(1e-15));
  CHECK(ca.ap_per_threshold[2] == 1.0);
  CHECK(ca.ap_per_threshold[3] == 0.0);
}

TEST_CASE("ap_per_class skips detections on unknown images") {
  Builder b;
  b.image("a");
  b.gt.instances = {gt({0, 0, 10, 10})};
  b.add(det({0, 0, 10, 10}, 0.9));
  b.add(det({0, 0, 10, 10}, 0.95, 0, 2, "elsewhere"));
  const auto r = ap_per_class(b.gt, b.dets);
  CHECK(r.skipped_detections == 1);
  CHECK(r.find(2)->ap == 1.0);
}

TEST_CASE("ap_per_class with masks") {
  Builder b;
  b.image("a");
  b.gt.images[0] = {"a", 8, 8};
  Bitmask m(8, 8);
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) m.set(x, y);
  }
  GtInstance g = gt({0, 0, 4, 4});
  g.mask = rle_encode(m);
  b.gt.instances = {g};
  Detection d = det({0, 0, 4, 4}, 0.9);
  d.mask = g.mask;
  b.add(d);
  EvalConfig cfg;
  cfg.kind = IouKind::mask;
  CHECK(ap_per_class(b.gt, b.dets, cfg).find(2)->ap == 1.0);
  b.dets.detections[0].mask.reset();
  CHECK_THROWS_AS(ap_per_class(b.gt, b.dets, cfg), DataError);
}

TEST_CASE("class_weights") {
  GroundTruthSet g;
  g.classes = ClassTable::road_users();
  for (int i = 0; i < 100; ++i) g.instances.push_back(gt({0, 0, 5, 5}, false, 2, "a"));
  for (int i = 0; i < 50; ++i) g.instances.push_back(gt({0, 0, 5, 5}, false, 0, i < 25 ? "a" : "b"));
  g.instances.push_back(gt({0, 0, 5, 5}, true, 3, "a"));
  const auto w = class_weights(g);
  CHECK(w.at(2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(w.at(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(w.count(3) == 0);

  const auto per_image = class_weights(g, WeightMode::images);
  CHECK(per_image.at(2) == doctest::Approx(1.0 / 3.0));
  CHECK(per_image.at(0) == doctest::Approx(2.0 / 3.0));

  GroundTruthSet single;
  single.instances = {gt({0, 0, 5, 5}, false, 4)};
  CHECK(class_weights(single).at(4) == 1.0);

  CHECK_THROWS_AS(class_weights(GroundTruthSet{}), DataError);
}

TEST_CASE("class_weights equal a recount on random ground truth") {
  SplitMix64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    GroundTruthSet g;
    std::map<int, int> counts;
    int total = 0;
    const int n = rng.integer(1, 60);
    for (int i = 0; i < n; ++i) {
      const int cls = rng.integer(0, 7);
      const bool ignore = rng.uniform() < 0.2;
      g.instances.push_back(gt({0, 0, 3, 3}, ignore, cls));
      if (!ignore) {
        ++counts[cls];
        ++total;
      }
    }
    if (total == 0) continue;
    const auto w = class_weights(g);
    CHECK(w.size() == counts.size());
    for (const auto& [cls, c] : counts) CHECK(w.at(cls) == doctest::Approx(double(c) / total).epsilon(1e-15));
  }
}

TEST_CASE("weighted_ap") {
  ApBreakdown b;
  b.classes = {{2, "car", true, 100, 0.6, {}}, {0, "person", true, 50, 0.3, {}}, {5, "train", false, 0, 0.0, {}}};
  CHECK(weighted_ap(b, {{2, 100.0}, {0, 50.0}}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(weighted_ap(b, {{2, 1.0}, {0, 1.0}}) == doctest::Approx(0.45).epsilon(1e-15));
  CHECK_THROWS_AS(weighted_ap(b, {{2, 1.0}}), DataError);
  ApBreakdown perfect;
  perfect.classes = {{2, "car", true, 3, 1.0, {}}, {0, "person", true, 9, 1.0, {}}};
  CHECK(weighted_ap(perfect, {{2, 0.9}, {0, 0.1}}) == doctest::Approx(1.0).epsilon(1e-15));
}
