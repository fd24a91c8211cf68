#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "meshpad/image.hpp"

namespace meshpad {

namespace detail {

struct PngReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

inline void png_flush_noop(png_structp) {}

inline void png_read_from_cursor(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->size) png_error(png, "truncated PNG");
  std::memcpy(data, cur->data + cur->offset, length);
  cur->offset += length;
}

// Rows must outlive the call; libpng reports errors through longjmp, so no
// object with a destructor is constructed after setjmp.
inline bool png_encode_rows(std::vector<std::uint8_t>& out, int width, int height, int bit_depth, int color_type,
                            std::vector<png_bytep>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  auto& px = const_cast<std::vector<std::uint8_t>&>(img.pixels);
  for (int y = 0; y < img.height; ++y) rows[y] = px.data() + static_cast<std::size_t>(y) * img.width * 3;
  if (!detail::png_encode_rows(out, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows))
    throw Error("PNG encoding failed");
  return out;
}

/// 16-bit grayscale PNG (big-endian samples, as PNG requires).
inline std::vector<std::uint8_t> encode_png16(const Image<std::uint16_t>& img) {
  std::vector<std::uint8_t> buffer(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    buffer[2 * i] = static_cast<std::uint8_t>(img.data()[i] >> 8);
    buffer[2 * i + 1] = static_cast<std::uint8_t>(img.data()[i] & 0xFF);
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  for (int y = 0; y < img.height(); ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * img.width() * 2;
  std::vector<std::uint8_t> out;
  if (!detail::png_encode_rows(out, img.width(), img.height(), 16, PNG_COLOR_TYPE_GRAY, rows))
    throw Error("PNG encoding failed");
  return out;
}

namespace detail {

// Output objects live in the caller's frame, so a longjmp back to the setjmp
// point leaves them in a well-defined state.
inline const char* png_decode_into(PngReadCursor& cursor, RgbImage& img, std::vector<png_bytep>& rows) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return "PNG decoder init failed";
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return "PNG decoder init failed";
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return "corrupt PNG stream";
  }
  png_set_read_fn(png, &cursor, png_read_from_cursor);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const auto w = static_cast<int>(png_get_image_width(png, info));
  const auto h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    return "unsupported PNG layout";
  }
  img = RgbImage(w, h);
  rows.resize(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[y] = img.at(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return nullptr;
}

}  // namespace detail

/// Decodes any PNG into 8-bit RGB (palette/gray expanded, alpha dropped).
inline RgbImage decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw Error("not a PNG stream");
  detail::PngReadCursor cursor{bytes.data(), bytes.size(), 0};
  RgbImage img;
  std::vector<png_bytep> rows;
  if (const char* err = detail::png_decode_into(cursor, img, rows)) throw Error(err);
  return img;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace meshpad
