#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "meshpad/common.hpp"

namespace meshpad {

template <class T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw Error("negative image size");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool same_shape(const auto& other) const { return width_ == other.width() && height_ == other.height(); }

  T& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Clamp-to-edge access.
  const T& at_clamped(int x, int y) const {
    return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Image<double>;
/// Binary mask; 0 or 1 per pixel.
using Bitmap = Image<std::uint8_t>;

inline std::size_t count(const Bitmap& b) {
  return static_cast<std::size_t>(std::count_if(b.data().begin(), b.data().end(), [](auto v) { return v != 0; }));
}

/// Dilation with a (2r+1)x(2r+1) square structuring element.
inline Bitmap dilate(const Bitmap& in, int radius) {
  if (radius <= 0) return in;
  // Separable: rows then columns.
  Bitmap rows(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      std::uint8_t v = 0;
      for (int dx = -radius; dx <= radius && !v; ++dx)
        if (in.contains(x + dx, y)) v = in(x + dx, y) ? 1 : 0;
      rows(x, y) = v;
    }
  Bitmap out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      std::uint8_t v = 0;
      for (int dy = -radius; dy <= radius && !v; ++dy)
        if (rows.contains(x, y + dy)) v = rows(x, y + dy);
      out(x, y) = v;
    }
  return out;
}

inline Bitmap bitmap_or(const Bitmap& a, const Bitmap& b) {
  Bitmap out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = (a.data()[i] || b.data()[i]) ? 1 : 0;
  return out;
}

inline Bitmap bitmap_and_not(const Bitmap& a, const Bitmap& b) {
  Bitmap out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = (a.data()[i] && !b.data()[i]) ? 1 : 0;
  return out;
}

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

}  // namespace meshpad
