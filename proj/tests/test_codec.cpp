#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include <unistd.h>

#include "vcmbench/codec_orchestrator.hpp"
#include "vcmbench/error.hpp"
#include "vcmbench/image_io.hpp"
#include "vcmbench/mock_codec.hpp"
#include "vcmbench/process.hpp"
#include "vcmbench/quality_metrics.hpp"
#include "vcmbench/selftest.hpp"

using namespace vcmbench;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vcmbench-codec-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void use_bundled_codec() { ::setenv("VCMBENCH_CODEC_DIR", VCMBENCH_TOOLS_DIR, 1); }

Image gradient(int w, int h) {
  Image img = make_image(ColorModel::rgb, w, h, 8);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      img.planes[0].samples[i] = static_cast<std::uint16_t>(40 + 2 * x);
      img.planes[1].samples[i] = static_cast<std::uint16_t>(60 + 3 * y);
      img.planes[2].samples[i] = static_cast<std::uint16_t>(90 + x + y);
    }
  }
  return img;
}

std::vector<fs::path> write_images(const fs::path& dir, int n) {
  std::vector<fs::path> out;
  fs::create_directories(dir);
  for (int i = 0; i < n; ++i) {
    const fs::path p = dir / ("img" + std::to_string(i) + ".png");
    Image g = gradient(64, 32);
    for (auto& v : g.planes[0].samples) v = static_cast<std::uint16_t>(v + 7 * i);
    write_png(p, g);
    out.push_back(p);
  }
  return out;
}

CodecProfile mock_profile() {
  CodecProfile p;
  p.name = "mock";
  p.encode_template = "vcm-mock-codec encode -i {input} -o {output} --qp {qp}";
  p.decode_template = "vcm-mock-codec decode -i {input} -o {output}";
  return p;
}

}  // namespace

TEST_CASE("render_command") {
  const Bindings b{{"input", "a.png"}, {"output", "a_qp37.bin"}, {"qp", "37"}};
  CHECK(render_command("enc -i {input} -q {qp} -o {output}", b) ==
        std::vector<std::string>{"enc", "-i", "a.png", "-q", "37", "-o", "a_qp37.bin"});
  CHECK(render_command("enc --in={input}", {{"input", "my file.png"}}) ==
        std::vector<std::string>{"enc", "--in=my file.png"});
  CHECK_THROWS_WITH_AS(render_command("enc {input} {bogus}", b), doctest::Contains("unknown placeholder {bogus}"),
                       DataError);
  CHECK_THROWS_WITH_AS(render_command("enc {input} {width}", b), doctest::Contains("unbound placeholder {width}"),
                       DataError);
}

TEST_CASE("profile validation") {
  CHECK_NOTHROW(validate_profile(mock_profile()));
  auto p = mock_profile();
  p.encode_template = "enc -i {input} --qp {qp}";
  CHECK_THROWS_AS(validate_profile(p), DataError);
  p = mock_profile();
  p.encode_template = "enc -i {input} -o {output} --quality {quality}";
  CHECK_THROWS_AS(validate_profile(p), DataError);
  p = mock_profile();
  p.decode_template = "dec -i {input} -o {output} {nope}";
  CHECK_THROWS_AS(validate_profile(p), DataError);

  const auto parsed = parse_codec_profile(R"({"name": "jpeg", "encode": "cjpeg -quality {quality} -outfile {output} {input}",
      "decode": "djpeg -outfile {output} {input}", "quality_axis": "continuous_quality", "bitstream_ext": ".jpg"})");
  CHECK(parsed.quality_axis == QualityAxis::continuous_quality);
  CHECK(parsed.quality_max == 100.0);
  CHECK(parse_codec_profile(profile_to_json(parsed).dump()).bitstream_ext == ".jpg");
  CHECK(profile_hash(parsed) == profile_hash(parse_codec_profile(profile_to_json(parsed).dump())));
  CHECK(profile_hash(parsed) != profile_hash(mock_profile()));
  CHECK_THROWS_AS(parse_codec_profile(R"({"name": "x", "encode": "a {input} {output} {qp}"})"), DataError);
}

TEST_CASE("naming") {
  CHECK(format_quality(37) == "37");
  CHECK(format_quality(62.5) == "62.5");
  auto p = mock_profile();
  CHECK(variant_name("frankfurt_000000", p, 37) == "frankfurt_000000_qp37");
  p.quality_axis = QualityAxis::continuous_quality;
  CHECK(variant_name("a", p, 80) == "a_q80");
}

TEST_CASE("mock codec model") {
  CHECK(mock_quantizer_step(4) == 1.0);
  CHECK(mock_quantizer_step(0) == 1.0);
  CHECK(mock_quantizer_step(22) == doctest::Approx(8.0));
  CHECK(mock_qp_for_quality(100) == 0.0);
  CHECK(mock_qp_for_quality(0) == doctest::Approx(51.0));
  MockCodecParams p;
  p.qp = 27;
  CHECK(mock_target_bytes(1000, p) == 500);

  const Image img = gradient(16, 8);
  p.qp = 0;
  CHECK(mock_decode(mock_encode(img, p)) == img);
  p.qp = 37;
  const Image lossy = mock_decode(mock_encode(img, p));
  CHECK(lossy.width() == 16);
  CHECK(psnr(img, lossy) < psnr(img, mock_decode(mock_encode(img, {27}))));
  CHECK_THROWS_AS(mock_decode({1, 2, 3}), DataError);
}

TEST_CASE("run_sweep with the mock codec") {
  use_bundled_codec();
  const fs::path dir = fresh_dir("sweep");
  const auto images = write_images(dir / "in", 2);
  SweepOptions so;
  so.out_dir = dir / "out";
  SweepStats stats;
  const auto runs = run_sweep(images, mock_profile(), so, &stats);
  REQUIRE(runs.size() == 6);
  std::size_t records = 0;
  for (const auto& r : runs) {
    CHECK(r.ok());
    for (const auto& it : r.items) {
      ++records;
      CHECK(it.status == ItemStatus::ok);
      CHECK(fs::path(it.bitstream_path).filename().string() ==
            it.stem + "_qp" + format_quality(r.quality_param) + ".bin");
      MockCodecParams p;
      p.qp = r.quality_param;
      CHECK(it.bitstream_bytes == mock_target_bytes(64 * 32 * 3, p));
    }
  }
  CHECK(records == 12);
  CHECK(stats.executed == 12);
  CHECK(stats.cache_hits == 0);

  SweepStats again;
  const auto rerun = run_sweep(images, mock_profile(), so, &again);
  CHECK(again.executed == 0);
  CHECK(again.cache_hits == 12);
  CHECK(runs_to_json(rerun)["runs"][0]["items"][0]["bytes"] == runs_to_json(runs)["runs"][0]["items"][0]["bytes"]);

  // A changed input invalidates only its own items.
  Image changed = gradient(64, 32);
  changed.planes[1].samples[5] += 1;
  write_png(images[0], changed);
  SweepStats partial;
  run_sweep(images, mock_profile(), so, &partial);
  CHECK(partial.executed == 6);
  CHECK(partial.cache_hits == 6);

  const auto bitrate = runs[0].bitrate();
  CHECK(bitrate.mean_bpp == doctest::Approx(8.0 * mock_target_bytes(6144, {22}) / 2048.0));
}

TEST_CASE("parallel and serial sweeps produce the same records") {
  use_bundled_codec();
  const fs::path dir = fresh_dir("parallel");
  const auto images = write_images(dir / "in", 3);
  SweepOptions so;
  so.qps = {22, 37};
  so.out_dir = dir / "serial";
  const auto serial = run_sweep(images, mock_profile(), so);
  so.out_dir = dir / "parallel";
  so.parallelism = 4;
  const auto parallel = run_sweep(images, mock_profile(), so);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t r = 0; r < serial.size(); ++r) {
    for (std::size_t i = 0; i < serial[r].items.size(); ++i) {
      CHECK(serial[r].items[i].bitstream_hash == parallel[r].items[i].bitstream_hash);
      CHECK(serial[r].items[i].stem == parallel[r].items[i].stem);
    }
  }
}

TEST_CASE("codec failures are isolated per item") {
  use_bundled_codec();
  const fs::path dir = fresh_dir("fail");
  auto images = write_images(dir / "in", 2);
  // Not a PNG: the mock encoder rejects it while the other image succeeds.
  write_file_atomic(dir / "in" / "broken.png", "garbage");
  images.push_back(dir / "in" / "broken.png");
  SweepOptions so;
  so.qps = {32};
  so.out_dir = dir / "out";
  SweepStats stats;
  CHECK_THROWS_AS(run_sweep(images, mock_profile(), so, &stats), DataError);  // PNG header read of the input

  images.pop_back();
  auto p = mock_profile();
  p.encode_template = "vcm-mock-codec encode -i {input} -o {output} --qp {qp} --no-such-flag";
  const auto runs = run_sweep(images, p, so, &stats);
  CHECK(stats.failures == 2);
  CHECK(!runs[0].ok());
  CHECK(runs[0].items[0].diagnostics.find("encode exited with code") != std::string::npos);
  so.strict = true;
  CHECK_THROWS_AS(run_sweep(images, p, so), CodecError);

  p = mock_profile();
  p.encode_template = "no-such-encoder-binary -i {input} -o {output} --qp {qp}";
  so.strict = false;
  const auto missing = run_sweep(images, p, so, &stats);
  CHECK(stats.failures == 2);
  CHECK(missing[0].items[0].diagnostics.find("no-such-encoder-binary") != std::string::npos);
}

TEST_CASE("sweep argument checks") {
  SweepOptions so;
  so.out_dir = fresh_dir("args");
  so.qps = {22.5};
  CHECK_THROWS_AS(run_sweep({}, mock_profile(), so), DataError);
  so.qps = {99};
  CHECK_THROWS_AS(run_sweep({}, mock_profile(), so), DataError);
}

TEST_CASE("target PSNR search on an analytic codec") {
  const PsnrOracle mock = [](double q) { return 20.0 + q / 2.0; };
  const QualityAxisRange axis{0, 100, true, false};
  TargetSearchOptions so;
  so.target_db = 40;
  const auto r = search_quality_for_target_psnr(mock, axis, so);
  CHECK(r.converged);
  CHECK(std::abs(r.psnr - 40) <= 0.2);
  CHECK(std::abs(r.quality - 40) <= 0.4);
  CHECK(r.iterations <= 20);
  CHECK(r.history.size() == static_cast<std::size_t>(r.iterations));

  so.target_db = 75;  // above the best the axis can reach
  CHECK_THROWS_WITH_AS(search_quality_for_target_psnr(mock, axis, so), doctest::Contains("above"), DataError);

  so.target_db = 33;
  so.tolerance_db = std::numeric_limits<double>::infinity();
  const auto once = search_quality_for_target_psnr(mock, axis, so);
  CHECK(once.iterations == 1);
  CHECK(once.converged);

  // QP-style axis: PSNR falls as the parameter grows.
  const PsnrOracle qp_codec = [](double qp) { return 50.0 - 0.5 * qp; };
  so = {};
  so.target_db = 33.5;
  const auto q = search_quality_for_target_psnr(qp_codec, {0, 63, false, true}, so);
  CHECK(q.converged);
  CHECK(q.quality == 33);

  const PsnrOracle wobbly = [](double x) { return x < 30 ? 40.0 - x / 2.0 : 20.0 + x / 2.0; };
  so = {};
  so.target_db = 42;
  CHECK_THROWS_WITH_AS(search_quality_for_target_psnr(wobbly, axis, so), doctest::Contains("not monotone"), DataError);

  so = {};
  so.target_db = 40.1;
  so.tolerance_db = 1e-9;
  so.max_iter = 3;
  const auto capped = search_quality_for_target_psnr(mock, axis, so);
  CHECK(!capped.converged);
  CHECK(capped.iterations == 3);
}

TEST_CASE("target PSNR search driving the mock codec") {
  use_bundled_codec();
  const fs::path dir = fresh_dir("search");
  const auto images = write_images(dir / "in", 1);
  auto p = mock_profile();
  p.name = "mockq";
  p.quality_axis = QualityAxis::continuous_quality;
  p.encode_template = "vcm-mock-codec encode -i {input} -o {output} --quality {quality}";
  p.quality_max = 100;
  TargetSearchOptions so;
  so.target_db = 40;
  const auto r = search_quality_for_target_psnr(images[0], p, so, dir / "work");
  CHECK(r.converged);
  CHECK(std::abs(r.psnr - 40) <= 0.2);
}
