#pragma once

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "adsrnet/data/image.hpp"

namespace adsrnet {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

/// Decodes a PNG into 8-bit RGB. Palette images are expanded, grayscale
/// is replicated across the three channels, alpha is dropped, and 16-bit
/// samples are scaled by 1/257 and rounded to nearest.
inline Image8 read_png(const std::string& path) {
  detail::FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) {
    throw std::runtime_error(detail::str_cat("read_png: cannot open ", path));
  }
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw std::runtime_error(detail::str_cat("read_png: not a PNG file: ", path));
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("read_png: png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("read_png: png_create_info_struct failed");
  }

  // Declared before setjmp: on a libpng error we longjmp back here, tear
  // the structs down and throw; these buffers unwind with the exception.
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  Image8 out;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(detail::str_cat("read_png: corrupt PNG: ", path));
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_byte color_type = png_get_color_type(png, info);
  png_byte bit_depth = png_get_bit_depth(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  png_byte channels = png_get_channels(png, info);
  if (channels != 3 || (bit_depth != 8 && bit_depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(detail::str_cat(
        "read_png: unsupported layout in ", path, " (channels ",
        static_cast<int>(channels), ", depth ", static_cast<int>(bit_depth), ")"));
  }

  std::size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out = Image8(static_cast<std::int64_t>(height), static_cast<std::int64_t>(width));
  if (bit_depth == 8) {
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = raw[i];
  } else {
    // Network byte order: high byte first. round(v/257) == (v+128)/257
    // for every 16-bit v.
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      unsigned v = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
      out.pixels[i] = static_cast<std::uint8_t>((v + 128u) / 257u);
    }
  }
  return out;
}

/// Writes an 8-bit RGB PNG.
inline void write_png(const std::string& path, const Image8& img) {
  if (img.h < 1 || img.w < 1) {
    throw std::invalid_argument("write_png: empty image");
  }
  detail::FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) {
    throw std::runtime_error(detail::str_cat("write_png: cannot open ", path));
  }

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("write_png: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("write_png: png_create_info_struct failed");
  }

  std::vector<png_bytep> rows(static_cast<std::size_t>(img.h));

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(detail::str_cat("write_png: failed writing ", path));
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.w),
               static_cast<png_uint_32>(img.h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::int64_t y = 0; y < img.h; ++y) {
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(img.pixels.data() + y * img.w * 3);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace adsrnet
