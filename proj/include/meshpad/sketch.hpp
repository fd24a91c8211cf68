#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "meshpad/canny.hpp"
#include "meshpad/image.hpp"
#include "meshpad/mesh.hpp"
#include "meshpad/png_io.hpp"
#include "meshpad/raster.hpp"

namespace meshpad {

enum class StrokeClass : std::uint8_t { Background = 0, Kept = 1, Edit = 2 };

/// Stroke bitmap with a per-pixel class. Kept and edit strokes are disjoint
/// by construction (one class per pixel).
class SketchImage {
 public:
  SketchImage() = default;
  SketchImage(int width, int height) : classes_(width, height, StrokeClass::Background) {}

  int width() const { return classes_.width(); }
  int height() const { return classes_.height(); }
  StrokeClass& operator()(int x, int y) { return classes_(x, y); }
  StrokeClass operator()(int x, int y) const { return classes_(x, y); }
  const Image<StrokeClass>& classes() const { return classes_; }

  Bitmap mask_of(StrokeClass c) const {
    Bitmap out(width(), height());
    for (std::size_t i = 0; i < classes_.size(); ++i) out.data()[i] = classes_.data()[i] == c ? 1 : 0;
    return out;
  }
  Bitmap strokes() const {
    Bitmap out(width(), height());
    for (std::size_t i = 0; i < classes_.size(); ++i)
      out.data()[i] = classes_.data()[i] != StrokeClass::Background ? 1 : 0;
    return out;
  }
  Bitmap kept() const { return mask_of(StrokeClass::Kept); }
  Bitmap edit() const { return mask_of(StrokeClass::Edit); }

  friend bool operator==(const SketchImage&, const SketchImage&) = default;

 private:
  Image<StrokeClass> classes_;
};

// PNG colour contract.
inline constexpr std::array<std::uint8_t, 3> kBackgroundRgb = {0xFF, 0xFF, 0xFF};
inline constexpr std::array<std::uint8_t, 3> kKeptRgb = {0x00, 0x00, 0x00};
inline constexpr std::array<std::uint8_t, 3> kEditRgb = {0xFF, 0x00, 0x00};

inline RgbImage sketch_to_rgb(const SketchImage& s) {
  RgbImage img(s.width(), s.height());
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x) {
      const auto& c = s(x, y) == StrokeClass::Edit ? kEditRgb : (s(x, y) == StrokeClass::Kept ? kKeptRgb : kBackgroundRgb);
      std::copy(c.begin(), c.end(), img.at(x, y));
    }
  return img;
}

/// Exact contract colours map one-to-one. Other colours (hand-drawn input)
/// fall back to: reddish -> edit, dark -> kept, otherwise background.
inline StrokeClass classify_rgb(const std::uint8_t* p) {
  const int r = p[0], g = p[1], b = p[2];
  if (r >= 128 && g < 128 && b < 128) return StrokeClass::Edit;
  if (r + g + b < 3 * 128) return StrokeClass::Kept;
  return StrokeClass::Background;
}

inline SketchImage sketch_from_rgb(const RgbImage& img) {
  SketchImage s(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) s(x, y) = classify_rgb(img.at(x, y));
  return s;
}

inline std::vector<std::uint8_t> encode_sketch_png(const SketchImage& s) { return encode_png(sketch_to_rgb(s)); }
inline SketchImage decode_sketch_png(const std::vector<std::uint8_t>& bytes) { return sketch_from_rgb(decode_png(bytes)); }

struct SketchConfig {
  CannyThresholds thresholds{};
  double background_depth = 1.5;  // covered depth is normalized to [0, 1]
};

/// Depth rescaled to [0, 1] over covered pixels; background set to a constant
/// beyond the far end so silhouettes always produce a step.
inline GrayImage normalized_depth(const RenderBuffers& buf, double background) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double d : buf.depth.data())
    if (std::isfinite(d)) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  GrayImage out(buf.width(), buf.height(), background);
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = buf.depth.data()[i];
    if (std::isfinite(d)) out.data()[i] = (d - lo) / span;
  }
  return out;
}

/// One grayscale channel of the normal map, encoded as (n + 1) / 2.
inline GrayImage normal_channel(const RenderBuffers& buf, int axis) {
  GrayImage out(buf.width(), buf.height(), 0.5);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (buf.face.data()[i] >= 0) out.data()[i] = 0.5 * (buf.normal.data()[i][axis] + 1.0);
  return out;
}

/// Union of Canny edges over the depth map and each normal-map channel.
inline Bitmap stroke_edges(const RenderBuffers& buf, const SketchConfig& cfg = {}) {
  Bitmap strokes = canny(normalized_depth(buf, cfg.background_depth), cfg.thresholds);
  for (int axis = 0; axis < 3; ++axis) strokes = bitmap_or(strokes, canny(normal_channel(buf, axis), cfg.thresholds));
  return strokes;
}

/// Pixels whose nearest surface in `scene` is a triangle of `part`.
inline Bitmap visibility_mask(const QuantizedMesh& part, const QuantizedMesh& scene, const RenderBuffers& scene_buffers) {
  const std::vector<Triangle> order(scene.begin(), scene.end());
  std::vector<std::uint8_t> in_part(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) in_part[i] = part.contains(order[i]) ? 1 : 0;
  Bitmap mask(scene_buffers.width(), scene_buffers.height());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const int f = scene_buffers.face.data()[i];
    mask.data()[i] = f >= 0 && in_part[static_cast<std::size_t>(f)] ? 1 : 0;
  }
  return mask;
}

inline Bitmap visibility_mask(const QuantizedMesh& part, const QuantizedMesh& scene, const CameraPose& camera) {
  return visibility_mask(part, scene, rasterize(scene, camera));
}

/// Sketch plus the intermediate layers used to build it.
struct SketchLayers {
  SketchImage sketch;
  Bitmap strokes;
  Bitmap removed_mask;  // visibility mask of the removed part
  Bitmap edit_region;   // removed_mask dilated by one pixel
  RenderBuffers buffers;
};

/// Synthetic sketch of `mesh` with strokes inside the 1-px dilated visibility
/// mask of `removed` labelled as edit strokes, the rest as kept strokes.
inline SketchLayers synth_sketch_layers(const QuantizedMesh& mesh, const QuantizedMesh& removed, const CameraPose& camera,
                                        const SketchConfig& cfg = {}) {
  SketchLayers out;
  out.buffers = rasterize(mesh, camera);
  out.strokes = stroke_edges(out.buffers, cfg);
  out.removed_mask = removed.empty() ? Bitmap(out.buffers.width(), out.buffers.height())
                                     : visibility_mask(removed, mesh, out.buffers);
  out.edit_region = dilate(out.removed_mask, 1);
  out.sketch = SketchImage(out.buffers.width(), out.buffers.height());
  for (std::size_t i = 0; i < out.strokes.size(); ++i) {
    if (!out.strokes.data()[i]) continue;
    const int x = static_cast<int>(i % out.strokes.width());
    const int y = static_cast<int>(i / out.strokes.width());
    out.sketch(x, y) = out.edit_region.data()[i] ? StrokeClass::Edit : StrokeClass::Kept;
  }
  return out;
}

inline SketchImage synth_sketch(const QuantizedMesh& mesh, const QuantizedMesh& removed, const CameraPose& camera,
                                const SketchConfig& cfg = {}) {
  return synth_sketch_layers(mesh, removed, camera, cfg).sketch;
}

/// Sketch warp: affine (rotation, translation, scale about the image center)
/// composed with a bilinear displacement field over a coarse control grid.
struct SketchWarp {
  double rotation_deg = 0.0;
  double translate_x = 0.0;  // fraction of width
  double translate_y = 0.0;  // fraction of height
  double scale = 1.0;
  int grid = 0;                              // control points per side (0 = no elastic term)
  std::vector<std::array<double, 2>> displacement;  // grid*grid entries, pixels
};

struct SketchAugmentRanges {
  double max_rotation_deg = 5.0;
  double max_translate = 0.03;
  double max_scale_delta = 0.05;
  int grid = 5;
  double max_displacement_px = 4.0;
};

inline SketchWarp sample_sketch_warp(Rng& rng, const SketchAugmentRanges& r = {}) {
  SketchWarp w;
  w.rotation_deg = uniform(rng, -r.max_rotation_deg, r.max_rotation_deg);
  w.translate_x = uniform(rng, -r.max_translate, r.max_translate);
  w.translate_y = uniform(rng, -r.max_translate, r.max_translate);
  w.scale = 1.0 + uniform(rng, -r.max_scale_delta, r.max_scale_delta);
  w.grid = r.grid;
  w.displacement.resize(static_cast<std::size_t>(r.grid) * r.grid);
  for (auto& d : w.displacement) {
    d = {uniform(rng, -r.max_displacement_px, r.max_displacement_px),
         uniform(rng, -r.max_displacement_px, r.max_displacement_px)};
    const double len = std::hypot(d[0], d[1]);
    if (len > r.max_displacement_px) {
      d[0] *= r.max_displacement_px / len;
      d[1] *= r.max_displacement_px / len;
    }
  }
  return w;
}

/// Nearest-neighbour inverse warp; classes travel with their pixels.
inline SketchImage warp_sketch(const SketchImage& in, const SketchWarp& w) {
  const int width = in.width();
  const int height = in.height();
  SketchImage out(width, height);
  const double cx = 0.5 * width;
  const double cy = 0.5 * height;
  const double theta = -w.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double tx = w.translate_x * width;
  const double ty = w.translate_y * height;
  const bool elastic = w.grid >= 2 && w.displacement.size() == static_cast<std::size_t>(w.grid) * w.grid;

  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double px = x + 0.5;
      double py = y + 0.5;
      if (elastic) {
        const double gx = px / width * (w.grid - 1);
        const double gy = py / height * (w.grid - 1);
        const int ix = std::min(static_cast<int>(gx), w.grid - 2);
        const int iy = std::min(static_cast<int>(gy), w.grid - 2);
        const double fx = gx - ix;
        const double fy = gy - iy;
        auto at = [&](int i, int j) { return w.displacement[static_cast<std::size_t>(j) * w.grid + i]; };
        for (int k = 0; k < 2; ++k) {
          const double d = (1 - fx) * (1 - fy) * at(ix, iy)[k] + fx * (1 - fy) * at(ix + 1, iy)[k] +
                           (1 - fx) * fy * at(ix, iy + 1)[k] + fx * fy * at(ix + 1, iy + 1)[k];
          (k == 0 ? px : py) -= d;
        }
      }
      const double ux = (px - cx - tx) / w.scale;
      const double uy = (py - cy - ty) / w.scale;
      const double sx = cx + c * ux - s * uy;
      const double sy = cy + s * ux + c * uy;
      const int ix = static_cast<int>(std::floor(sx));
      const int iy = static_cast<int>(std::floor(sy));
      if (in.classes().contains(ix, iy)) out(x, y) = in(ix, iy);
    }
  return out;
}

inline SketchImage augment_sketch(const SketchImage& in, Rng& rng, const SketchAugmentRanges& r = {}) {
  return warp_sketch(in, sample_sketch_warp(rng, r));
}

struct SketchDiff {
  Bitmap erased;
  Bitmap added;
};

/// Stroke-level difference; classes are ignored.
inline SketchDiff sketch_diff(const SketchImage& before, const SketchImage& after) {
  if (before.width() != after.width() || before.height() != after.height())
    throw Error("sketch_diff: dimension mismatch");
  const Bitmap a = before.strokes();
  const Bitmap b = after.strokes();
  return {bitmap_and_not(a, b), bitmap_and_not(b, a)};
}

}  // namespace meshpad
