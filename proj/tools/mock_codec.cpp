// Deterministic stand-in codec used by the self test and the examples.
//   vcm-mock-codec encode -i in.png -o out.bin (--qp Q | --quality Q)
//   vcm-mock-codec decode -i in.bin -o out.png

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vcmbench/error.hpp"
#include "vcmbench/image_io.hpp"
#include "vcmbench/mock_codec.hpp"
#include "vcmbench/process.hpp"

int main(int argc, char** argv) {
  using namespace vcmbench;
  CLI::App app{"Mock image codec with an analytic size model", "vcm-mock-codec"};
  app.require_subcommand(1);

  std::string input, output;
  MockCodecParams params;
  double quality = -1.0;
  double qp = -1.0;
  auto* enc = app.add_subcommand("encode", "PNG to bitstream");
  enc->add_option("-i,--input", input, "Input PNG")->required();
  enc->add_option("-o,--output", output, "Output bitstream")->required();
  auto* qp_opt = enc->add_option("--qp", qp, "Quantization parameter");
  enc->add_option("--quality", quality, "Quality in [0, 100], higher is better")->excludes(qp_opt);
  enc->add_option("--bytes-per-sample", params.bytes_per_sample_at_ref, "Size budget per sample at the reference QP");
  enc->add_option("--ref-qp", params.ref_qp, "Reference QP of the size model");
  enc->add_option("--halving-qp", params.halving_qp, "QP increase that halves the size budget");
  auto* dec = app.add_subcommand("decode", "Bitstream to PNG");
  dec->add_option("-i,--input", input, "Input bitstream")->required();
  dec->add_option("-o,--output", output, "Output PNG")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (enc->parsed()) {
      if (qp < 0.0 && quality < 0.0) {
        std::cerr << "encode needs --qp or --quality\n";
        return 1;
      }
      params.qp = qp >= 0.0 ? qp : mock_qp_for_quality(quality);
      const auto bits = mock_encode(read_png(input), params);
      write_file_atomic(output, std::string_view(reinterpret_cast<const char*>(bits.data()), bits.size()));
    } else {
      const std::string bytes = read_file(input);
      write_png(output, mock_decode(std::vector<std::uint8_t>(bytes.begin(), bytes.end())));
    }
  } catch (const std::exception& e) {
    std::cerr << "vcm-mock-codec: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
