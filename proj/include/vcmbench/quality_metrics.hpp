#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>

#include "vcmbench/image_io.hpp"

namespace vcmbench {

enum class PsnrPolicy {
  luma,      // BT.601 Y of RGB input; plane 0 of gray/YUV input
  rgb_mean,  // PSNR of the MSE averaged over all planes
};

// Value reported for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

double psnr(const Image& original, const Image& decoded, PsnrPolicy policy = PsnrPolicy::luma);

std::string_view to_string(PsnrPolicy p);
PsnrPolicy psnr_policy_from_string(std::string_view s);

struct ImageDims {
  int width = 0;
  int height = 0;
};

struct BitrateStats {
  double mean_bpp = 0.0;
  double mean_kbit_per_image = 0.0;
  std::size_t n_images = 0;
};

// bpp_i = 8 * bytes_i / (w_i * h_i); both means are arithmetic over images.
BitrateStats bitrate_of_run(std::span<const std::uint64_t> bitstream_bytes, std::span<const ImageDims> dims);

// One point of a rate/accuracy curve.
struct RdPoint {
  double quality_param = 0.0;  // QP for integer-axis codecs
  double bpp = 0.0;
  double kbit_per_image = 0.0;
  double metric = 0.0;  // weighted AP in [0, 1]
  std::size_t n_images = 0;
  bool operator==(const RdPoint&) const = default;
};

}  // namespace vcmbench
