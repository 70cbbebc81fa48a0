#include "vcmbench/mock_codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "vcmbench/error.hpp"

namespace vcmbench {

namespace {

constexpr char kMagic[4] = {'V', 'C', 'M', 'K'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8 + 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

double mock_qp_for_quality(double quality) { return (100.0 - std::clamp(quality, 0.0, 100.0)) * 0.51; }

double mock_quantizer_step(double qp) { return std::max(1.0, std::exp2((qp - 4.0) / 6.0)); }

std::uint64_t mock_target_bytes(std::uint64_t samples, const MockCodecParams& p) {
  const double b = static_cast<double>(samples) * p.bytes_per_sample_at_ref * std::exp2(-(p.qp - p.ref_qp) / p.halving_qp);
  return static_cast<std::uint64_t>(std::ceil(b));
}

std::vector<std::uint8_t> mock_encode(const Image& img, const MockCodecParams& p) {
  if (img.planes.empty()) throw DataError("mock encoder: empty image");
  const double step = mock_quantizer_step(p.qp);
  std::vector<std::uint8_t> levels;
  std::uint64_t samples = 0;
  for (const auto& plane : img.planes) {
    for (std::uint16_t v : plane.samples) {
      const auto q = static_cast<std::uint16_t>(std::floor(static_cast<double>(v) / step));
      levels.push_back(static_cast<std::uint8_t>(q & 0xff));
      levels.push_back(static_cast<std::uint8_t>(q >> 8));
    }
    samples += plane.samples.size();
  }
  uLongf packed_len = compressBound(static_cast<uLong>(levels.size()));
  std::vector<std::uint8_t> packed(packed_len);
  if (compress2(packed.data(), &packed_len, levels.data(), static_cast<uLong>(levels.size()), 9) != Z_OK) {
    throw DataError("mock encoder: zlib failure");
  }
  packed.resize(packed_len);

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(1);  // version
  out.push_back(static_cast<std::uint8_t>(img.model));
  out.push_back(static_cast<std::uint8_t>(img.planes.size()));
  out.push_back(static_cast<std::uint8_t>(img.bit_depth));
  put_u32(out, static_cast<std::uint32_t>(img.width()));
  put_u32(out, static_cast<std::uint32_t>(img.height()));
  std::uint64_t qp_bits;
  std::memcpy(&qp_bits, &p.qp, sizeof qp_bits);
  put_u32(out, static_cast<std::uint32_t>(qp_bits));
  put_u32(out, static_cast<std::uint32_t>(qp_bits >> 32));
  put_u32(out, static_cast<std::uint32_t>(packed.size()));
  out.insert(out.end(), packed.begin(), packed.end());

  const std::uint64_t target = mock_target_bytes(samples, p);
  if (out.size() < target) out.resize(target, 0);
  return out;
}

Image mock_decode(const std::vector<std::uint8_t>& bs) {
  if (bs.size() < kHeaderBytes || std::memcmp(bs.data(), kMagic, 4) != 0) throw DataError("mock decoder: bad magic");
  if (bs[4] != 1) throw DataError("mock decoder: unsupported version");
  const auto model = static_cast<ColorModel>(bs[5]);
  const int nplanes = bs[6];
  const int depth = bs[7];
  const auto w = static_cast<int>(get_u32(&bs[8]));
  const auto h = static_cast<int>(get_u32(&bs[12]));
  const std::uint64_t qp_bits = get_u32(&bs[16]) | (static_cast<std::uint64_t>(get_u32(&bs[20])) << 32);
  double qp;
  std::memcpy(&qp, &qp_bits, sizeof qp);
  const std::uint32_t packed_len = get_u32(&bs[24]);
  if (kHeaderBytes + packed_len > bs.size()) throw DataError("mock decoder: truncated bitstream");

  Image img = make_image(model, w, h, depth);
  if (static_cast<int>(img.planes.size()) != nplanes) throw DataError("mock decoder: plane count mismatch");
  std::vector<std::uint8_t> levels(static_cast<std::size_t>(w) * h * nplanes * 2);
  uLongf len = static_cast<uLongf>(levels.size());
  if (uncompress(levels.data(), &len, bs.data() + kHeaderBytes, packed_len) != Z_OK || len != levels.size()) {
    throw DataError("mock decoder: corrupt payload");
  }
  const double step = mock_quantizer_step(qp);
  const double maxv = std::ldexp(1.0, depth) - 1.0;
  std::size_t k = 0;
  for (auto& plane : img.planes) {
    for (auto& v : plane.samples) {
      const double level = static_cast<double>(levels[k] | (levels[k + 1] << 8));
      k += 2;
      const double rec = step <= 1.0 ? level : std::floor((level + 0.5) * step);
      v = static_cast<std::uint16_t>(std::min(rec, maxv));
    }
  }
  return img;
}

}  // namespace vcmbench
