#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vcmbench/quality_metrics.hpp"

namespace vcmbench {

enum class QualityAxis {
  qp_integer,          // integer QP, PSNR falls as the value grows
  continuous_quality,  // real-valued quality, PSNR rises as the value grows
};

// External encoder/decoder pair. Templates use the placeholders {input},
// {output}, {qp}, {quality}, {width} and {height}.
struct CodecProfile {
  std::string name;
  std::string encode_template;
  std::string decode_template;
  QualityAxis quality_axis = QualityAxis::qp_integer;
  double quality_min = 0.0;
  double quality_max = 63.0;
  bool intra_only = true;
  std::string bitstream_ext = ".bin";
  std::string decoded_ext = ".png";
};

// Throws DataError when a template does not use {input} and {output} exactly
// once, uses an unknown placeholder, or names the wrong quality placeholder.
void validate_profile(const CodecProfile& p);
CodecProfile parse_codec_profile(std::string_view bytes);
nlohmann::json profile_to_json(const CodecProfile& p);
std::string profile_hash(const CodecProfile& p);

std::string_view to_string(QualityAxis a);
QualityAxis quality_axis_from_string(std::string_view s);

using Bindings = std::map<std::string, std::string>;

// Placeholder names used by a template, in order of appearance (with repeats).
std::vector<std::string> template_placeholders(std::string_view tmpl);

// Splits on whitespace first, then substitutes placeholders inside each
// token, so a bound value containing spaces stays one argument.
std::vector<std::string> render_command(std::string_view tmpl, const Bindings& bindings);

// "37" for integer QPs, shortest round-trip form otherwise.
std::string format_quality(double q);
// {stem}_qp{qp} for integer axes, {stem}_q{quality} otherwise.
std::string variant_name(const std::string& stem, const CodecProfile& p, double quality);

enum class ItemStatus { ok, cached, failed };

struct RunItem {
  std::string stem;
  std::string input_path;
  std::string input_hash;
  std::string bitstream_path;
  std::string decoded_path;
  std::string bitstream_hash;
  std::uint64_t bitstream_bytes = 0;
  int width = 0;
  int height = 0;
  double wall_seconds = 0.0;
  ItemStatus status = ItemStatus::failed;
  std::string diagnostics;
};

struct CompressionRun {
  std::string profile;
  std::string profile_hash;
  double quality_param = 0.0;
  std::vector<RunItem> items;  // one per input image, input order

  bool ok() const;
  BitrateStats bitrate() const;
};

struct SweepOptions {
  std::vector<double> qps{22, 27, 32, 37, 42, 47};
  int parallelism = 1;
  std::filesystem::path out_dir;
  bool strict = false;
};

struct SweepStats {
  std::size_t executed = 0;
  std::size_t cache_hits = 0;
  std::size_t failures = 0;
};

// Encodes and decodes every (image, qp) pair. Finished items whose input,
// profile and qp are unchanged are served from the cache. With strict set,
// any failed item makes the call throw CodecError after all items ran.
std::vector<CompressionRun> run_sweep(const std::vector<std::filesystem::path>& images, const CodecProfile& profile,
                                      const SweepOptions& opts, SweepStats* stats = nullptr);

nlohmann::json runs_to_json(const std::vector<CompressionRun>& runs);
std::vector<CompressionRun> runs_from_json(const nlohmann::json& j);

// PNG files of a directory in lexicographic order.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

// Target-PSNR search ----------------------------------------------------------

struct PsnrProbe {
  double quality = 0.0;
  double psnr = 0.0;
};

struct TargetSearchOptions {
  double target_db = 40.0;
  double tolerance_db = 0.2;
  int max_iter = 20;
};

struct TargetSearchResult {
  double quality = 0.0;
  double psnr = 0.0;
  int iterations = 0;  // number of probes
  bool converged = false;
  std::vector<PsnrProbe> history;
};

using PsnrOracle = std::function<double(double quality)>;

struct QualityAxisRange {
  double lo = 0.0;
  double hi = 100.0;
  bool psnr_increases = true;
  bool integer = false;
};

// Bisection on the quality axis. Throws DataError when the target is not
// bracketed by the axis bounds or when probes reveal non-monotone PSNR.
TargetSearchResult search_quality_for_target_psnr(const PsnrOracle& oracle, const QualityAxisRange& axis,
                                                  const TargetSearchOptions& opts);

// Same search driving the profile's codec on one image. Probe files go to
// work_dir.
TargetSearchResult search_quality_for_target_psnr(const std::filesystem::path& image, const CodecProfile& profile,
                                                  const TargetSearchOptions& opts,
                                                  const std::filesystem::path& work_dir,
                                                  PsnrPolicy policy = PsnrPolicy::luma);

}  // namespace vcmbench
