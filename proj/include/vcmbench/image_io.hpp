#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace vcmbench {

enum class ColorModel { gray, rgb, yuv };
enum class ChromaFormat { c400, c420, c444 };

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> samples;  // row-major

  std::uint16_t at(int x, int y) const { return samples[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Plane&) const = default;
};

// Planar image with 1 (gray) or 3 (RGB / YUV) planes of up to 16 bits.
struct Image {
  ColorModel model = ColorModel::gray;
  int bit_depth = 8;
  std::vector<Plane> planes;

  int width() const { return planes.empty() ? 0 : planes[0].width; }
  int height() const { return planes.empty() ? 0 : planes[0].height; }
  bool operator==(const Image&) const = default;
};

Image make_image(ColorModel model, int width, int height, int bit_depth);

// Reads 8/16-bit PNG. Palette images are expanded, alpha is dropped.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);
// Width and height from the PNG header without decoding pixels.
std::pair<int, int> png_dimensions(const std::filesystem::path& path);

// Raw planar YUV, one frame. Samples above 8 bits are 16-bit little endian.
Image read_yuv_planar(const std::filesystem::path& path, int width, int height, int bit_depth,
                      ChromaFormat chroma);

}  // namespace vcmbench
