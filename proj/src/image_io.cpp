#include "vcmbench/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>

#include "vcmbench/error.hpp"

namespace vcmbench {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open '" + path.string() + "'");
  return f;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw DataError(std::string("PNG: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

class PngReader {
 public:
  explicit PngReader(std::FILE* f) {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    if (!png_) throw DataError("PNG: cannot allocate reader");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_read_struct(&png_, nullptr, nullptr);
      throw DataError("PNG: cannot allocate info");
    }
    png_init_io(png_, f);
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

class PngWriter {
 public:
  explicit PngWriter(std::FILE* f) {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    if (!png_) throw DataError("PNG: cannot allocate writer");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_write_struct(&png_, nullptr);
      throw DataError("PNG: cannot allocate info");
    }
    png_init_io(png_, f);
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

}  // namespace

Image make_image(ColorModel model, int width, int height, int bit_depth) {
  if (width <= 0 || height <= 0) throw DataError("image dimensions must be positive");
  if (bit_depth < 1 || bit_depth > 16) throw DataError("bit depth must be within 1..16");
  Image img;
  img.model = model;
  img.bit_depth = bit_depth;
  const int n = model == ColorModel::gray ? 1 : 3;
  for (int i = 0; i < n; ++i) {
    img.planes.push_back({width, height, std::vector<std::uint16_t>(static_cast<std::size_t>(width) * height, 0)});
  }
  return img;
}

Image read_png(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  PngReader r(f.get());
  png_read_info(r.png_, r.info_);
  const int color = png_get_color_type(r.png_, r.info_);
  int depth = png_get_bit_depth(r.png_, r.info_);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png_);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png_);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png_);
  if (png_get_valid(r.png_, r.info_, PNG_INFO_tRNS)) png_set_strip_alpha(r.png_);
  if (depth == 16) png_set_swap(r.png_);  // host order for little-endian hosts
  png_read_update_info(r.png_, r.info_);

  const int w = static_cast<int>(png_get_image_width(r.png_, r.info_));
  const int h = static_cast<int>(png_get_image_height(r.png_, r.info_));
  const int channels = png_get_channels(r.png_, r.info_);
  depth = png_get_bit_depth(r.png_, r.info_);
  const std::size_t rowbytes = png_get_rowbytes(r.png_, r.info_);

  std::vector<std::uint8_t> buf(rowbytes * static_cast<std::size_t>(h));
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = buf.data() + rowbytes * static_cast<std::size_t>(y);
  png_read_image(r.png_, rows.data());
  png_read_end(r.png_, nullptr);

  Image img = make_image(channels >= 3 ? ColorModel::rgb : ColorModel::gray, w, h, depth);
  const auto nplanes = img.planes.size();
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < nplanes; ++c) {
        const std::size_t idx = static_cast<std::size_t>(x) * static_cast<std::size_t>(channels) + c;
        std::uint16_t v;
        if (depth == 16) {
          v = static_cast<std::uint16_t>(row[2 * idx] | (row[2 * idx + 1] << 8));
        } else {
          v = row[idx];
        }
        img.planes[c].samples[static_cast<std::size_t>(y) * w + x] = v;
      }
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.model == ColorModel::yuv) throw DataError("PNG output supports gray and RGB images only");
  if (img.bit_depth != 8 && img.bit_depth != 16) throw DataError("PNG output needs 8- or 16-bit samples");
  auto f = open_file(path, "wb");
  PngWriter wr(f.get());
  const int w = img.width(), h = img.height();
  const int channels = static_cast<int>(img.planes.size());
  png_set_IHDR(wr.png_, wr.info_, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), img.bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png_, wr.info_);
  const std::size_t bps = img.bit_depth == 16 ? 2 : 1;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * channels * bps);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::uint16_t v = img.planes[static_cast<std::size_t>(c)].at(x, y);
        const std::size_t idx = (static_cast<std::size_t>(x) * channels + c) * bps;
        if (bps == 2) {
          row[idx] = static_cast<std::uint8_t>(v >> 8);  // PNG is big endian
          row[idx + 1] = static_cast<std::uint8_t>(v & 0xff);
        } else {
          row[idx] = static_cast<std::uint8_t>(v);
        }
      }
    }
    png_write_row(wr.png_, row.data());
  }
  png_write_end(wr.png_, nullptr);
}

std::pair<int, int> png_dimensions(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  PngReader r(f.get());
  png_read_info(r.png_, r.info_);
  return {static_cast<int>(png_get_image_width(r.png_, r.info_)),
          static_cast<int>(png_get_image_height(r.png_, r.info_))};
}

Image read_yuv_planar(const std::filesystem::path& path, int width, int height, int bit_depth, ChromaFormat chroma) {
  Image img;
  img.model = chroma == ChromaFormat::c400 ? ColorModel::gray : ColorModel::yuv;
  img.bit_depth = bit_depth;
  if (width <= 0 || height <= 0) throw DataError("YUV dimensions must be positive");
  if (bit_depth < 1 || bit_depth > 16) throw DataError("bit depth must be within 1..16");
  const int cw = chroma == ChromaFormat::c420 ? (width + 1) / 2 : width;
  const int ch = chroma == ChromaFormat::c420 ? (height + 1) / 2 : height;
  img.planes.push_back({width, height, {}});
  if (chroma != ChromaFormat::c400) {
    img.planes.push_back({cw, ch, {}});
    img.planes.push_back({cw, ch, {}});
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  const std::size_t bps = bit_depth > 8 ? 2 : 1;
  for (auto& p : img.planes) {
    const std::size_t n = static_cast<std::size_t>(p.width) * p.height;
    std::vector<std::uint8_t> raw(n * bps);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw DataError("'" + path.string() + "' is shorter than one " + std::to_string(width) + "x" +
                      std::to_string(height) + " frame");
    }
    p.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.samples[i] = bps == 2 ? static_cast<std::uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8)) : raw[i];
    }
  }
  return img;
}

}  // namespace vcmbench
