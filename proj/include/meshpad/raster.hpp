#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "meshpad/image.hpp"
#include "meshpad/mesh.hpp"

namespace meshpad {

/// Orbit camera looking at the center of the unit cube. Azimuth rotates about
/// +y starting from +z; elevation lifts toward +y.
struct CameraPose {
  double azimuth_deg = 30.0;
  double elevation_deg = 30.0;
  double distance = 2.6;
  double fov_deg = 40.0;
  int image_size = 512;

  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

inline constexpr double kTrainingAzimuthMin = -90.0;
inline constexpr double kTrainingAzimuthMax = 90.0;
inline constexpr double kTrainingElevationMin = 0.0;
inline constexpr double kTrainingElevationMax = 60.0;

inline CameraPose sample_camera(Rng& rng) {
  CameraPose c;
  c.azimuth_deg = uniform(rng, kTrainingAzimuthMin, kTrainingAzimuthMax);
  c.elevation_deg = uniform(rng, kTrainingElevationMin, kTrainingElevationMax);
  return c;
}

inline nlohmann::json camera_to_json(const CameraPose& c) {
  return {{"azimuth", c.azimuth_deg},
          {"elevation", c.elevation_deg},
          {"distance", c.distance},
          {"fov", c.fov_deg},
          {"image_size", c.image_size}};
}

inline CameraPose camera_from_json(const nlohmann::json& j) {
  CameraPose c;
  c.azimuth_deg = j.value("azimuth", c.azimuth_deg);
  c.elevation_deg = j.value("elevation", c.elevation_deg);
  c.distance = j.value("distance", c.distance);
  c.fov_deg = j.value("fov", c.fov_deg);
  c.image_size = j.value("image_size", c.image_size);
  if (c.image_size <= 0 || c.image_size > 8192) throw Error("camera image_size out of range");
  if (!(c.distance > 0.0) || !(c.fov_deg > 0.0 && c.fov_deg < 180.0)) throw Error("invalid camera intrinsics");
  return c;
}

struct ScreenPoint {
  double x = 0.0;  // pixel units, origin at top-left corner
  double y = 0.0;
  double depth = 0.0;  // distance along the viewing axis
};

/// Pinhole view derived from a CameraPose.
class View {
 public:
  explicit View(const CameraPose& pose) : size_(pose.image_size) {
    const double az = pose.azimuth_deg * std::numbers::pi / 180.0;
    const double el = pose.elevation_deg * std::numbers::pi / 180.0;
    const Vec3 target{0.5, 0.5, 0.5};
    eye_ = target + Vec3{std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)} * pose.distance;
    forward_ = normalized(target - eye_);
    Vec3 up{0.0, 1.0, 0.0};
    if (norm(cross(forward_, up)) < 1e-9) up = {0.0, 0.0, -1.0};
    right_ = normalized(cross(forward_, up));
    up_ = cross(right_, forward_);
    focal_ = 0.5 * size_ / std::tan(0.5 * pose.fov_deg * std::numbers::pi / 180.0);
  }

  int size() const { return size_; }
  const Vec3& eye() const { return eye_; }
  double focal() const { return focal_; }

  ScreenPoint project(Vec3 p) const {
    const Vec3 q = p - eye_;
    const double d = dot(q, forward_);
    return {0.5 * size_ + focal_ * dot(q, right_) / d, 0.5 * size_ - focal_ * dot(q, up_) / d, d};
  }

 private:
  int size_;
  Vec3 eye_, forward_, right_, up_;
  double focal_;
};

inline constexpr double kNearPlane = 1e-3;

/// Per-pixel nearest surface. `face` holds the index of the winning input
/// triangle (-1 for background).
struct RenderBuffers {
  Image<double> depth;
  Image<Vec3> normal;
  Image<int> face;

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }
  bool covered(int x, int y) const { return std::isfinite(depth(x, y)); }

  Bitmap coverage() const {
    Bitmap out(width(), height());
    for (std::size_t i = 0; i < depth.size(); ++i) out.data()[i] = std::isfinite(depth.data()[i]) ? 1 : 0;
    return out;
  }
};

namespace detail {

// Top-left fill convention on a clockwise-positive edge function.
inline bool edge_is_top_left(double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

// Edge function evaluated with the endpoints in a fixed order, so a shared
// edge gives bit-identical (negated) values in both triangles.
inline double edge_function(const ScreenPoint& a, const ScreenPoint& b, double px, double py) {
  const bool flip = a.x > b.x || (a.x == b.x && a.y > b.y);
  const ScreenPoint& p = flip ? b : a;
  const ScreenPoint& q = flip ? a : b;
  const double w = (q.x - p.x) * (py - p.y) - (q.y - p.y) * (px - p.x);
  return flip ? -w : w;
}

}  // namespace detail

/// Z-buffered rasterization with perspective-correct depth and flat face
/// normals facing the camera. Ties keep the earlier triangle.
inline RenderBuffers rasterize(const RealMesh& mesh, const CameraPose& camera) {
  const View view(camera);
  const int n = view.size();
  RenderBuffers buf{Image<double>(n, n, std::numeric_limits<double>::infinity()), Image<Vec3>(n, n),
                    Image<int>(n, n, -1)};

  for (std::size_t f = 0; f < mesh.size(); ++f) {
    const auto& tri = mesh.triangles[f];
    ScreenPoint s[3] = {view.project(tri[0]), view.project(tri[1]), view.project(tri[2])};
    if (s[0].depth <= kNearPlane || s[1].depth <= kNearPlane || s[2].depth <= kNearPlane) continue;
    double area = (s[1].x - s[0].x) * (s[2].y - s[0].y) - (s[1].y - s[0].y) * (s[2].x - s[0].x);
    if (std::abs(area) < 1e-12) continue;
    if (area < 0.0) {
      std::swap(s[1], s[2]);
      area = -area;
    }
    Vec3 normal = normalized(cross(tri[1] - tri[0], tri[2] - tri[0]));
    if (dot(normal, view.eye() - tri[0]) < 0.0) normal = normal * -1.0;

    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({s[0].x, s[1].x, s[2].x}))));
    const int x1 = std::min(n - 1, static_cast<int>(std::ceil(std::max({s[0].x, s[1].x, s[2].x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({s[0].y, s[1].y, s[2].y}))));
    const int y1 = std::min(n - 1, static_cast<int>(std::ceil(std::max({s[0].y, s[1].y, s[2].y}))));
    bool top_left[3];
    for (int e = 0; e < 3; ++e) {
      const auto& a = s[(e + 1) % 3];
      const auto& b = s[(e + 2) % 3];
      top_left[e] = detail::edge_is_top_left(a.x, a.y, b.x, b.y);
    }
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        double w[3];
        bool inside = true;
        for (int e = 0; e < 3 && inside; ++e) {
          const auto& a = s[(e + 1) % 3];
          const auto& b = s[(e + 2) % 3];
          w[e] = detail::edge_function(a, b, px, py);
          inside = w[e] > 0.0 || (w[e] == 0.0 && top_left[e]);
        }
        if (!inside) continue;
        const double inv = (w[0] / s[0].depth + w[1] / s[1].depth + w[2] / s[2].depth) / area;
        const double d = 1.0 / inv;
        if (d < buf.depth(x, y)) {
          buf.depth(x, y) = d;
          buf.normal(x, y) = normal;
          buf.face(x, y) = static_cast<int>(f);
        }
      }
    }
  }
  return buf;
}

/// Renders a quantized mesh; face indices refer to canonical triangle order.
inline RenderBuffers rasterize(const QuantizedMesh& mesh, const CameraPose& camera) {
  return rasterize(dequantize(mesh), camera);
}

}  // namespace meshpad
