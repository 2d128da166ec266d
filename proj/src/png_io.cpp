#include "spe/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

namespace spe::png {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct RawPixels {
  png_uint_32 height = 0;
  png_uint_32 width = 0;
  int bit_depth = 0;   // 8 or 16 after expansion
  int channels = 0;    // 1 (gray) or 3 (rgb)
  std::vector<unsigned char> rows;  // packed scanlines, big-endian 16-bit
};

RawPixels read_raw(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw ParseError("not a PNG file: " + path.string());

  png_structp png_ptr =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png_ptr) throw IoError("libpng init failed");
  png_infop info_ptr = png_create_info_struct(png_ptr);
  if (!info_ptr) {
    png_destroy_read_struct(&png_ptr, nullptr, nullptr);
    throw IoError("libpng init failed");
  }

  RawPixels out;
  std::vector<png_bytep> row_ptrs;

  if (setjmp(png_jmpbuf(png_ptr))) {
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    throw ParseError("corrupt PNG: " + path.string());
  }

  png_init_io(png_ptr, fp.get());
  png_set_sig_bytes(png_ptr, 8);
  png_read_info(png_ptr, info_ptr);

  const png_byte color_type = png_get_color_type(png_ptr, info_ptr);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_ptr);
  if (color_type == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png_ptr, info_ptr) < 8)
    png_set_expand_gray_1_2_4_to_8(png_ptr);
  if (png_get_valid(png_ptr, info_ptr, PNG_INFO_tRNS))
    png_set_tRNS_to_alpha(png_ptr);
  png_set_strip_alpha(png_ptr);
  png_set_interlace_handling(png_ptr);
  png_read_update_info(png_ptr, info_ptr);

  out.height = png_get_image_height(png_ptr, info_ptr);
  out.width = png_get_image_width(png_ptr, info_ptr);
  out.bit_depth = png_get_bit_depth(png_ptr, info_ptr);
  out.channels = png_get_channels(png_ptr, info_ptr);

  if (out.height == 0 || out.width == 0) {
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    throw ParseError("empty PNG: " + path.string());
  }
  if (out.channels != 1 && out.channels != 3) {
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    throw ParseError("unsupported channel count in " + path.string());
  }

  const std::size_t row_bytes = png_get_rowbytes(png_ptr, info_ptr);
  out.rows.resize(row_bytes * out.height);
  row_ptrs.resize(out.height);
  for (png_uint_32 y = 0; y < out.height; ++y)
    row_ptrs[y] = out.rows.data() + y * row_bytes;

  png_read_image(png_ptr, row_ptrs.data());
  png_read_end(png_ptr, nullptr);
  png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
  return out;
}

double sample_at(const RawPixels& raw, std::size_t row_off, png_uint_32 x,
                 int channel) {
  const std::size_t stride =
      static_cast<std::size_t>(raw.channels) * (raw.bit_depth == 16 ? 2 : 1);
  const unsigned char* p = raw.rows.data() + row_off + x * stride +
                           static_cast<std::size_t>(channel) *
                               (raw.bit_depth == 16 ? 2 : 1);
  if (raw.bit_depth == 16) {
    const unsigned v = (static_cast<unsigned>(p[0]) << 8) | p[1];  // network order
    return static_cast<double>(v) / 65535.0;
  }
  return static_cast<double>(*p) / 255.0;
}

void write_gray8(const std::filesystem::path& path,
                 const std::vector<unsigned char>& pixels, png_uint_32 height,
                 png_uint_32 width) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());

  png_structp png_ptr =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png_ptr) throw IoError("libpng init failed");
  png_infop info_ptr = png_create_info_struct(png_ptr);
  if (!info_ptr) {
    png_destroy_write_struct(&png_ptr, nullptr);
    throw IoError("libpng init failed");
  }

  if (setjmp(png_jmpbuf(png_ptr))) {
    png_destroy_write_struct(&png_ptr, &info_ptr);
    throw IoError("PNG write failed: " + path.string());
  }

  png_init_io(png_ptr, fp.get());
  png_set_compression_level(png_ptr, 1);
  png_set_IHDR(png_ptr, info_ptr, width, height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png_ptr, info_ptr);

  std::vector<png_const_bytep> row_ptrs(height);
  for (png_uint_32 y = 0; y < height; ++y)
    row_ptrs[y] = pixels.data() + static_cast<std::size_t>(y) * width;
  png_write_rows(png_ptr, const_cast<png_bytepp>(row_ptrs.data()), height);
  png_write_end(png_ptr, info_ptr);
  png_destroy_write_struct(&png_ptr, &info_ptr);
}

}  // namespace

Image read_image(const std::filesystem::path& path, GrayConversion conversion) {
  const RawPixels raw = read_raw(path);
  Image img(raw.height, raw.width);
  const std::size_t row_bytes = raw.rows.size() / raw.height;
  for (png_uint_32 y = 0; y < raw.height; ++y) {
    const std::size_t off = static_cast<std::size_t>(y) * row_bytes;
    for (png_uint_32 x = 0; x < raw.width; ++x) {
      double v;
      if (raw.channels == 1) {
        v = sample_at(raw, off, x, 0);
      } else {
        const double r = sample_at(raw, off, x, 0);
        const double g = sample_at(raw, off, x, 1);
        const double b = sample_at(raw, off, x, 2);
        v = conversion == GrayConversion::luma
                ? 0.299 * r + 0.587 * g + 0.114 * b
                : (r + g + b) / 3.0;
      }
      img(y, x) = static_cast<float>(v);
    }
  }
  return img;
}

Mask read_mask(const std::filesystem::path& path) {
  const RawPixels raw = read_raw(path);
  Mask m(raw.height, raw.width);
  const std::size_t row_bytes = raw.rows.size() / raw.height;
  for (png_uint_32 y = 0; y < raw.height; ++y) {
    const std::size_t off = static_cast<std::size_t>(y) * row_bytes;
    for (png_uint_32 x = 0; x < raw.width; ++x) {
      double v = 0.0;
      for (int c = 0; c < raw.channels; ++c)
        v += sample_at(raw, off, x, c);
      m(y, x) = v > 0.0;
    }
  }
  return m;
}

void write_image8(const std::filesystem::path& path, const Image& img) {
  std::vector<unsigned char> bytes(
      static_cast<std::size_t>(img.rows() * img.cols()));
  std::size_t i = 0;
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x)
      bytes[i++] = quantize8(img(y, x));
  write_gray8(path, bytes, static_cast<png_uint_32>(img.rows()),
              static_cast<png_uint_32>(img.cols()));
}

void write_mask(const std::filesystem::path& path, const Mask& mask) {
  std::vector<unsigned char> bytes(
      static_cast<std::size_t>(mask.rows() * mask.cols()));
  std::size_t i = 0;
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x)
      bytes[i++] = mask(y, x) ? 255 : 0;
  write_gray8(path, bytes, static_cast<png_uint_32>(mask.rows()),
              static_cast<png_uint_32>(mask.cols()));
}

}  // namespace spe::png
