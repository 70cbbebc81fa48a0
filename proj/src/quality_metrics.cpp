#include "vcmbench/quality_metrics.hpp"

#include <cmath>
#include <string>

#include "vcmbench/error.hpp"

namespace vcmbench {

namespace {

void check_compatible(const Image& a, const Image& b) {
  if (a.planes.size() != b.planes.size() || a.model != b.model) {
    throw DataError("PSNR: images have different color layouts");
  }
  if (a.bit_depth != b.bit_depth) throw DataError("PSNR: bit depth mismatch");
  for (std::size_t i = 0; i < a.planes.size(); ++i) {
    if (a.planes[i].width != b.planes[i].width || a.planes[i].height != b.planes[i].height) {
      throw DataError("PSNR: dimension mismatch");
    }
  }
  if (a.planes.empty()) throw DataError("PSNR: empty image");
}

double plane_mse(const Plane& a, const Plane& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = static_cast<double>(a.samples[i]) - static_cast<double>(b.samples[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.samples.size());
}

double luma_mse(const Image& a, const Image& b) {
  if (a.model != ColorModel::rgb) return plane_mse(a.planes[0], b.planes[0]);
  const auto& ar = a.planes[0].samples;
  const auto& ag = a.planes[1].samples;
  const auto& ab = a.planes[2].samples;
  const auto& br = b.planes[0].samples;
  const auto& bg = b.planes[1].samples;
  const auto& bb = b.planes[2].samples;
  double sum = 0.0;
  for (std::size_t i = 0; i < ar.size(); ++i) {
    const double ya = 0.299 * ar[i] + 0.587 * ag[i] + 0.114 * ab[i];
    const double yb = 0.299 * br[i] + 0.587 * bg[i] + 0.114 * bb[i];
    const double d = ya - yb;
    sum += d * d;
  }
  return sum / static_cast<double>(ar.size());
}

}  // namespace

double psnr(const Image& original, const Image& decoded, PsnrPolicy policy) {
  check_compatible(original, decoded);
  double mse = 0.0;
  if (policy == PsnrPolicy::luma) {
    mse = luma_mse(original, decoded);
  } else {
    for (std::size_t i = 0; i < original.planes.size(); ++i) mse += plane_mse(original.planes[i], decoded.planes[i]);
    mse /= static_cast<double>(original.planes.size());
  }
  if (mse == 0.0) return kPsnrIdentical;
  const double peak = std::ldexp(1.0, original.bit_depth) - 1.0;
  return 10.0 * std::log10(peak * peak / mse);
}

std::string_view to_string(PsnrPolicy p) { return p == PsnrPolicy::luma ? "luma" : "rgb_mean"; }

PsnrPolicy psnr_policy_from_string(std::string_view s) {
  if (s == "luma") return PsnrPolicy::luma;
  if (s == "rgb_mean") return PsnrPolicy::rgb_mean;
  throw DataError("unknown PSNR policy '" + std::string(s) + "'");
}

BitrateStats bitrate_of_run(std::span<const std::uint64_t> bytes, std::span<const ImageDims> dims) {
  if (bytes.empty()) throw DataError("bitrate: empty run");
  if (bytes.size() != dims.size()) throw DataError("bitrate: one dimension entry per bitstream required");
  BitrateStats s;
  s.n_images = bytes.size();
  double bpp_sum = 0.0, kbit_sum = 0.0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (bytes[i] == 0) throw DataError("bitrate: bitstream " + std::to_string(i) + " is empty");
    if (dims[i].width <= 0 || dims[i].height <= 0) throw DataError("bitrate: non-positive image size");
    const double bits = 8.0 * static_cast<double>(bytes[i]);
    bpp_sum += bits / (static_cast<double>(dims[i].width) * static_cast<double>(dims[i].height));
    kbit_sum += bits / 1000.0;
  }
  s.mean_bpp = bpp_sum / static_cast<double>(s.n_images);
  s.mean_kbit_per_image = kbit_sum / static_cast<double>(s.n_images);
  return s;
}

}  // namespace vcmbench
