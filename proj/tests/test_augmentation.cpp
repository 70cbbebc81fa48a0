#include <doctest.h>

#include <algorithm>

#include "vcmbench/augmentation.hpp"
#include "vcmbench/bd.hpp"
#include "vcmbench/error.hpp"

using namespace vcmbench;

namespace {

std::vector<ImageRecord> pristine(int n) {
  std::vector<ImageRecord> out;
  for (int i = 0; i < n; ++i) {
    const std::string id = "city_" + std::to_string(i);
    out.push_back({id, 2048, 1024, "/data/" + id + ".png", id, std::nullopt});
  }
  return out;
}

CompressionRun run(double qp, int n, int skip = -1) {
  CompressionRun r;
  r.profile = "vtm";
  r.profile_hash = "abc";
  r.quality_param = qp;
  for (int i = 0; i < n; ++i) {
    RunItem it;
    it.stem = "city_" + std::to_string(i);
    it.decoded_path = "/runs/" + it.stem + "_qp" + format_quality(qp) + ".png";
    it.bitstream_bytes = 1000;
    it.width = 2048;
    it.height = 1024;
    it.status = i == skip ? ItemStatus::failed : ItemStatus::ok;
    r.items.push_back(it);
  }
  return r;
}

std::vector<CompressionRun> six_runs(int n) {
  std::vector<CompressionRun> out;
  for (double q : kDefaultQpGrid) out.push_back(run(q, n));
  return out;
}

}  // namespace

TEST_CASE("iteration defaults") {
  CHECK(iteration_defaults("faster_rcnn").classic == 25000);
  CHECK(iteration_defaults("faster_rcnn").augmentation == 35000);
  CHECK(iteration_defaults("mask_rcnn").classic == 24000);
  CHECK(iteration_defaults("mask_rcnn").augmentation == 34000);
  CHECK(iteration_defaults("mask_rcnn").finetune == 10000);
  CHECK_THROWS_AS(iteration_defaults("yolo"), DataError);
  CHECK(default_hyperparameters("mask_rcnn")["base_lr"] == 0.01);
  CHECK(default_hyperparameters("faster_rcnn")["images_per_batch"] == 7);
}

TEST_CASE("augmented manifest") {
  const auto m = build_augmented_manifest(pristine(3), six_runs(3));
  CHECK(m.images.size() == 3 * 7);
  CHECK(validate_manifest(m).ok());
  REQUIRE(m.schedule.phases.size() == 1);
  CHECK(m.schedule.phases[0].label == PhaseLabel::mixed);
  CHECK(m.schedule.total_iterations() == 35000);
  CHECK(m.provenance.size() == 6);
  CHECK(m.images[3].image_id == "city_0_vtm_22");
  CHECK(m.images[3].stem == "city_0");
  CHECK(m.images[3].variant->quality == 22);

  AugmentOptions o;
  o.detector = "mask_rcnn";
  o.iterations = 1234;
  CHECK(build_augmented_manifest(pristine(3), six_runs(3), o).schedule.total_iterations() == 1234);
}

TEST_CASE("augmentation input errors") {
  CHECK_THROWS_WITH_AS(build_augmented_manifest(pristine(2), {}), doctest::Contains("at least one"), DataError);
  CHECK_THROWS_AS(build_augmented_manifest({}, six_runs(2)), DataError);

  auto runs = six_runs(3);
  runs[2] = run(32, 3, 1);
  CHECK_THROWS_WITH_AS(build_augmented_manifest(pristine(3), runs), doctest::Contains("(city_1, 32)"), DataError);
  runs[2] = run(32, 2);
  CHECK_THROWS_WITH_AS(build_finetune_manifest(pristine(3), runs), doctest::Contains("(city_2, 32)"), DataError);

  runs = six_runs(2);
  runs.push_back(run(22, 2));
  CHECK_THROWS_WITH_AS(build_augmented_manifest(pristine(2), runs), doctest::Contains("duplicate run"), DataError);
}

TEST_CASE("run order does not change the manifest") {
  auto runs = six_runs(4);
  const auto a = build_augmented_manifest(pristine(4), runs);
  std::reverse(runs.begin(), runs.end());
  std::swap(runs[1], runs[4]);
  const auto b = build_augmented_manifest(pristine(4), runs);
  CHECK(a == b);
  CHECK(serialize_manifest(a) == serialize_manifest(b));
}

TEST_CASE("fine-tuning schedule") {
  const ImageSelector compressed{false, true, "", {}};
  const auto s = build_finetune_schedule(25000, 10000, compressed);
  REQUIRE(s.phases.size() == 2);
  CHECK(s.phases[0].label == PhaseLabel::pristine);
  CHECK(s.phases[0].iterations == 25000);
  CHECK(s.phases[0].selector.include_pristine);
  CHECK(s.phases[1].label == PhaseLabel::compressed);
  CHECK(s.phases[1].iterations == 10000);
  CHECK(!s.phases[1].selector.include_pristine);
  CHECK(s.total_iterations() == 35000);
  CHECK(s.phases[0].order < s.phases[1].order);

  CHECK_THROWS_AS(build_finetune_schedule(25000, 0, compressed), DataError);
  CHECK_THROWS_AS(build_finetune_schedule(0, 10000, compressed), DataError);
  CHECK_THROWS_AS(build_finetune_schedule(25000, 10000, ImageSelector{true, false, "", {}}), DataError);

  CHECK(default_finetune_schedule("mask_rcnn", compressed).total_iterations() == 34000);

  const auto m = build_finetune_manifest(pristine(2), six_runs(2));
  CHECK(validate_manifest(m).ok());
  CHECK(select_images(m, m.schedule.phases[1].selector).size() == 12);
  CHECK(select_images(m, m.schedule.phases[0].selector).size() == 2);
  CHECK(schedule_from_json(schedule_to_json(m.schedule)) == m.schedule);
}
