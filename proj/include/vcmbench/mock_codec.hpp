#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcmbench/image_io.hpp"

namespace vcmbench {

// Deterministic stand-in for a real codec. Samples are quantized with step
// 2^((qp - 4) / 6) and the bitstream is padded to
//   ceil(samples * bytes_per_sample_at_ref * 2^(-(qp - ref_qp) / halving_qp))
// bytes whenever the compressed payload fits into that budget.
struct MockCodecParams {
  double qp = 32.0;
  double bytes_per_sample_at_ref = 1.0;
  double ref_qp = 22.0;
  double halving_qp = 5.0;
};

// Equivalent QP of a continuous quality value in [0, 100].
double mock_qp_for_quality(double quality);
double mock_quantizer_step(double qp);
std::uint64_t mock_target_bytes(std::uint64_t samples, const MockCodecParams& p);

std::vector<std::uint8_t> mock_encode(const Image& img, const MockCodecParams& p);
Image mock_decode(const std::vector<std::uint8_t>& bitstream);

}  // namespace vcmbench
