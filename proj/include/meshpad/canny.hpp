#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "meshpad/image.hpp"

namespace meshpad {

struct CannyThresholds {
  double low = 0.1;   // fraction of the maximum gradient magnitude
  double high = 0.2;
};

namespace canny_detail {

// Binomial approximation of a sigma=1 Gaussian; the weights are dyadic, so
// blurring integer images is exact in double precision.
inline constexpr std::array<double, 5> kBlur = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

inline GrayImage blur(const GrayImage& in) {
  GrayImage tmp(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double s = 0.0;
      for (int k = -2; k <= 2; ++k) s += kBlur[k + 2] * in.at_clamped(x + k, y);
      tmp(x, y) = s;
    }
  GrayImage out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double s = 0.0;
      for (int k = -2; k <= 2; ++k) s += kBlur[k + 2] * tmp.at_clamped(x, y + k);
      out(x, y) = s;
    }
  return out;
}

}  // namespace canny_detail

/// Canny edge detector: binomial blur, Sobel gradient, non-maximum suppression
/// along the quantized gradient direction, and hysteresis with 8-connectivity.
/// Thresholds are relative to the image's maximum gradient magnitude.
inline Bitmap canny(const GrayImage& image, CannyThresholds t = {}) {
  if (!(t.low > 0.0 && t.low < t.high)) throw Error("canny thresholds must satisfy 0 < low < high");
  const int w = image.width();
  const int h = image.height();
  Bitmap edges(w, h);
  if (w == 0 || h == 0) return edges;

  const GrayImage smooth = canny_detail::blur(image);
  GrayImage mag(w, h);
  Image<std::uint8_t> dir(w, h);
  double max_mag = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto p = [&](int dx, int dy) { return smooth.at_clamped(x + dx, y + dy); };
      const double gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      const double gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      const double m = std::hypot(gx, gy);
      mag(x, y) = m;
      max_mag = std::max(max_mag, m);
      double angle = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
      if (angle < 0.0) angle += 180.0;
      std::uint8_t d = 0;
      if (angle >= 22.5 && angle < 67.5) {
        d = 1;
      } else if (angle >= 67.5 && angle < 112.5) {
        d = 2;
      } else if (angle >= 112.5 && angle < 157.5) {
        d = 3;
      }
      dir(x, y) = d;
    }
  if (max_mag <= 0.0) return edges;

  // Neighbour offsets per direction, listed (lower, higher) in scan order.
  static constexpr int kOff[4][4] = {{-1, 0, 1, 0}, {-1, -1, 1, 1}, {0, -1, 0, 1}, {1, -1, -1, 1}};
  auto mag_or_zero = [&](int x, int y) { return mag.contains(x, y) ? mag(x, y) : 0.0; };
  const double high = t.high * max_mag;
  const double low = t.low * max_mag;

  // 0 = none, 1 = weak, 2 = strong
  Image<std::uint8_t> level(w, h);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = mag(x, y);
      if (m < low || m <= 0.0) continue;
      const auto& o = kOff[dir(x, y)];
      // Strict on one side, non-strict on the other: plateaus of equal
      // magnitude keep exactly one pixel.
      if (!(m > mag_or_zero(x + o[0], y + o[1]) && m >= mag_or_zero(x + o[2], y + o[3]))) continue;
      level(x, y) = m >= high ? 2 : 1;
      if (level(x, y) == 2) {
        edges(x, y) = 1;
        stack.emplace_back(x, y);
      }
    }
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (!edges.contains(nx, ny) || edges(nx, ny) || level(nx, ny) != 1) continue;
        edges(nx, ny) = 1;
        stack.emplace_back(nx, ny);
      }
  }
  return edges;
}

}  // namespace meshpad
