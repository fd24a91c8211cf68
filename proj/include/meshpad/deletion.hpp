#pragma once

#include <map>
#include <optional>

#include "meshpad/codec.hpp"
#include "meshpad/image.hpp"
#include "meshpad/mesh.hpp"
#include "meshpad/raster.hpp"
#include "meshpad/sketch.hpp"

namespace meshpad {

enum class VertexLabel : std::uint8_t { Delete = 0, Keep = 1 };

using VertexLabelMap = std::map<QuantizedVertex, VertexLabel>;

/// Learned or geometric per-vertex deletion predictor.
class DeletionClassifier {
 public:
  virtual ~DeletionClassifier() = default;
  /// Must return a label for every vertex encoded in `sequence`.
  virtual VertexLabelMap label(const TokenSequence& sequence, const SketchImage& sketch) const = 0;
};

/// Ground-truth labels: a vertex is deleted iff it belongs to any removed triangle.
inline VertexLabelMap oracle_labels_from_volume(const QuantizedMesh& mesh, const QuantizedMesh& removed) {
  const VertexSet doomed = removed.vertices();
  VertexLabelMap labels;
  for (const auto& v : mesh.vertices()) labels[v] = doomed.contains(v) ? VertexLabel::Delete : VertexLabel::Keep;
  return labels;
}

struct GeometricDeletionParams {
  /// Absolute camera-depth slack; defaults to 5% of the mesh bounding-box diagonal.
  std::optional<double> depth_tolerance;
  int dilation_px = 4;
  bool depth_test = true;
};

inline double default_depth_tolerance(const QuantizedMesh& mesh) {
  if (mesh.empty()) return 0.0;
  return 0.05 * bounds(dequantize(mesh)).diagonal();
}

/// True when nothing in the z-buffer lies in front of the vertex by more than
/// `tolerance` at the pixel it projects to.
inline bool vertex_visible(const View& view, const RenderBuffers& buffers, Vec3 p, double tolerance) {
  const ScreenPoint s = view.project(p);
  const int x = static_cast<int>(std::floor(s.x));
  const int y = static_cast<int>(std::floor(s.y));
  if (s.depth <= 0.0 || !buffers.depth.contains(x, y)) return false;
  return s.depth <= buffers.depth(x, y) + tolerance;
}

/// Stroke-driven labels: delete a vertex when it projects into the dilated
/// erased region and (optionally) passes the visibility test.
inline VertexLabelMap geometric_labels_from_strokes(const QuantizedMesh& mesh, const Bitmap& erased, const CameraPose& camera,
                                                    const RenderBuffers& scene_buffers,
                                                    const GeometricDeletionParams& params = {}) {
  const View view(camera);
  const Bitmap region = dilate(erased, params.dilation_px);
  const double tol = params.depth_tolerance.value_or(default_depth_tolerance(mesh));
  VertexLabelMap labels;
  for (const auto& v : mesh.vertices()) {
    const Vec3 p = dequantize_point(v, mesh.bins());
    const ScreenPoint s = view.project(p);
    const int x = static_cast<int>(std::floor(s.x));
    const int y = static_cast<int>(std::floor(s.y));
    bool doomed = s.depth > 0.0 && region.contains(x, y) && region(x, y);
    if (doomed && params.depth_test) doomed = vertex_visible(view, scene_buffers, p, tol);
    labels[v] = doomed ? VertexLabel::Delete : VertexLabel::Keep;
  }
  return labels;
}

inline VertexLabelMap geometric_labels_from_strokes(const QuantizedMesh& mesh, const Bitmap& erased, const CameraPose& camera,
                                                    const GeometricDeletionParams& params = {}) {
  return geometric_labels_from_strokes(mesh, erased, camera, rasterize(mesh, camera), params);
}

/// Prunes every triangle that has a vertex labelled Delete.
inline PruneResult apply_deletion(const QuantizedMesh& mesh, const VertexLabelMap& labels) {
  VertexSet doomed;
  for (const auto& [v, l] : labels)
    if (l == VertexLabel::Delete) doomed.insert(v);
  return prune(mesh, doomed);
}

/// Confusion-matrix metrics with Delete as the positive class, over the
/// vertices present in `truth`. Missing predictions count as Keep. A ratio
/// with an empty denominator is reported as 1.
struct LabelMetrics {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
  double accuracy = 1.0;
  double precision = 1.0;
  double recall = 1.0;
};

inline LabelMetrics label_metrics(const VertexLabelMap& predicted, const VertexLabelMap& truth) {
  LabelMetrics m;
  for (const auto& [v, t] : truth) {
    const auto it = predicted.find(v);
    const VertexLabel p = it == predicted.end() ? VertexLabel::Keep : it->second;
    const bool pd = p == VertexLabel::Delete;
    const bool td = t == VertexLabel::Delete;
    if (pd && td) ++m.true_positive;
    if (pd && !td) ++m.false_positive;
    if (!pd && !td) ++m.true_negative;
    if (!pd && td) ++m.false_negative;
  }
  auto ratio = [](std::size_t num, std::size_t den) { return den == 0 ? 1.0 : static_cast<double>(num) / den; };
  m.accuracy = ratio(m.true_positive + m.true_negative, truth.size());
  m.precision = ratio(m.true_positive, m.true_positive + m.false_positive);
  m.recall = ratio(m.true_positive, m.true_positive + m.false_negative);
  return m;
}

/// DeletionClassifier backed by geometric_labels_from_strokes; edit strokes
/// of the submitted sketch are the erased pixels.
class GeometricDeletionClassifier : public DeletionClassifier {
 public:
  GeometricDeletionClassifier(CameraPose camera, GeometricDeletionParams params = {})
      : camera_(camera), params_(params) {}

  VertexLabelMap label(const TokenSequence& sequence, const SketchImage& sketch) const override {
    const QuantizedMesh mesh = detokenize(sequence);
    return geometric_labels_from_strokes(mesh, sketch.edit(), camera_, params_);
  }

 private:
  CameraPose camera_;
  GeometricDeletionParams params_;
};

}  // namespace meshpad
