#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <limits>
#include <set>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "meshpad/common.hpp"

namespace meshpad {

inline constexpr int kDefaultBins = 128;

/// Integer grid vertex. Ordered by (z, y, x), the canonical sort key of the codec.
struct QuantizedVertex {
  int x = 0;
  int y = 0;
  int z = 0;

  constexpr int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend constexpr bool operator==(const QuantizedVertex&, const QuantizedVertex&) = default;
  friend constexpr std::strong_ordering operator<=>(const QuantizedVertex& a, const QuantizedVertex& b) {
    return std::tie(a.z, a.y, a.x) <=> std::tie(b.z, b.y, b.x);
  }
};

/// Unordered vertex triple stored with vertices sorted ascending, so equality
/// and ordering ignore winding.
class Triangle {
 public:
  Triangle() = default;
  Triangle(QuantizedVertex a, QuantizedVertex b, QuantizedVertex c) : v_{a, b, c} { std::sort(v_.begin(), v_.end()); }

  const QuantizedVertex& operator[](std::size_t i) const { return v_[i]; }
  const std::array<QuantizedVertex, 3>& vertices() const { return v_; }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

  bool degenerate() const { return v_[0] == v_[1] || v_[1] == v_[2]; }
  bool has_vertex(const QuantizedVertex& q) const { return v_[0] == q || v_[1] == q || v_[2] == q; }

  friend bool operator==(const Triangle&, const Triangle&) = default;
  friend std::strong_ordering operator<=>(const Triangle& a, const Triangle& b) { return a.v_ <=> b.v_; }

 private:
  std::array<QuantizedVertex, 3> v_{};
};

using VertexSet = std::set<QuantizedVertex>;

/// A set of non-degenerate triangles over the integer grid [0, bins-1]^3.
/// Iteration order is the canonical z-y-x order.
class QuantizedMesh {
 public:
  using container = std::set<Triangle>;
  using const_iterator = container::const_iterator;

  explicit QuantizedMesh(int bins = kDefaultBins) : bins_(bins) {
    if (bins < 2) throw Error("bins must be at least 2");
  }

  int bins() const { return bins_; }
  std::size_t size() const { return triangles_.size(); }
  bool empty() const { return triangles_.empty(); }
  const_iterator begin() const { return triangles_.begin(); }
  const_iterator end() const { return triangles_.end(); }
  const container& triangles() const { return triangles_; }

  bool in_range(const QuantizedVertex& v) const {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < bins_ && v.y < bins_ && v.z < bins_;
  }

  /// Inserts a triangle. Degenerate triangles are refused (returns false);
  /// out-of-range coordinates throw.
  bool insert(const Triangle& t) {
    for (const auto& v : t)
      if (!in_range(v)) throw Error("vertex coordinate outside [0, bins-1]");
    if (t.degenerate()) return false;
    return triangles_.insert(t).second;
  }

  bool insert(QuantizedVertex a, QuantizedVertex b, QuantizedVertex c) { return insert(Triangle(a, b, c)); }

  bool contains(const Triangle& t) const { return triangles_.contains(t); }
  bool erase(const Triangle& t) { return triangles_.erase(t) > 0; }

  VertexSet vertices() const {
    VertexSet out;
    for (const auto& t : triangles_) out.insert(t.begin(), t.end());
    return out;
  }

  friend bool operator==(const QuantizedMesh&, const QuantizedMesh&) = default;

 private:
  int bins_;
  container triangles_;
};

using RealTriangle = std::array<Vec3, 3>;

/// Pre-quantization mesh; a triangle soup over real coordinates.
struct RealMesh {
  std::vector<RealTriangle> triangles;

  std::size_t size() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }
};

struct Bounds {
  Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  void expand(Vec3 p) {
    for (int a = 0; a < 3; ++a) {
      min[a] = std::min(min[a], p[a]);
      max[a] = std::max(max[a], p[a]);
    }
  }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return (min + max) * 0.5; }
  double diagonal() const { return norm(extent()); }
};

inline Bounds bounds(const RealMesh& mesh) {
  Bounds b;
  for (const auto& t : mesh.triangles)
    for (const auto& p : t) b.expand(p);
  return b;
}

/// Uniformly rescales the mesh so its longest bounding-box side is 1 and its
/// box is centered at (0.5, 0.5, 0.5).
inline RealMesh normalize_to_unit_cube(const RealMesh& mesh) {
  if (mesh.empty()) throw EmptyMeshError();
  const Bounds b = bounds(mesh);
  const Vec3 ext = b.extent();
  const double longest = std::max({ext.x, ext.y, ext.z});
  const double scale = longest > 0.0 ? 1.0 / longest : 1.0;
  const Vec3 center = b.center();
  const Vec3 half{0.5, 0.5, 0.5};
  RealMesh out;
  out.triangles.reserve(mesh.size());
  for (const auto& t : mesh.triangles) {
    RealTriangle n;
    for (int i = 0; i < 3; ++i) n[i] = (t[i] - center) * scale + half;
    out.triangles.push_back(n);
  }
  return out;
}

inline int quantize_coordinate(double c, int bins) {
  const long q = std::lround(c * static_cast<double>(bins - 1));
  return static_cast<int>(std::clamp<long>(q, 0, bins - 1));
}

inline QuantizedVertex quantize_point(Vec3 p, int bins) {
  return {quantize_coordinate(p.x, bins), quantize_coordinate(p.y, bins), quantize_coordinate(p.z, bins)};
}

inline Vec3 dequantize_point(const QuantizedVertex& v, int bins) {
  const double s = 1.0 / static_cast<double>(bins - 1);
  return {v.x * s, v.y * s, v.z * s};
}

struct QuantizeStats {
  std::size_t input_triangles = 0;
  std::size_t degenerate_dropped = 0;
  std::size_t duplicates_merged = 0;
};

/// Snaps a normalized mesh onto the grid. Triangles that collapse are dropped
/// and coinciding triangles merge.
inline QuantizedMesh quantize(const RealMesh& mesh, int bins = kDefaultBins, QuantizeStats* stats = nullptr) {
  QuantizedMesh out(bins);
  QuantizeStats s;
  s.input_triangles = mesh.size();
  for (const auto& t : mesh.triangles) {
    Triangle q(quantize_point(t[0], bins), quantize_point(t[1], bins), quantize_point(t[2], bins));
    if (q.degenerate()) {
      ++s.degenerate_dropped;
    } else if (!out.insert(q)) {
      ++s.duplicates_merged;
    }
  }
  if (stats) *stats = s;
  return out;
}

inline RealMesh dequantize(const QuantizedMesh& mesh) {
  RealMesh out;
  out.triangles.reserve(mesh.size());
  for (const auto& t : mesh)
    out.triangles.push_back(
        {dequantize_point(t[0], mesh.bins()), dequantize_point(t[1], mesh.bins()), dequantize_point(t[2], mesh.bins())});
  return out;
}

struct PruneResult {
  QuantizedMesh removed;
  QuantizedMesh kept;
};

/// Splits the mesh into triangles touching any deleted vertex and the rest.
inline PruneResult prune(const QuantizedMesh& mesh, const VertexSet& deleted_vertices) {
  PruneResult r{QuantizedMesh(mesh.bins()), QuantizedMesh(mesh.bins())};
  for (const auto& t : mesh) {
    const bool hit = std::any_of(t.begin(), t.end(), [&](const auto& v) { return deleted_vertices.contains(v); });
    (hit ? r.removed : r.kept).insert(t);
  }
  return r;
}

inline void require_same_bins(const QuantizedMesh& a, const QuantizedMesh& b) {
  if (a.bins() != b.bins())
    throw Error("bins mismatch: " + std::to_string(a.bins()) + " vs " + std::to_string(b.bins()));
}

/// Set union of two meshes on the same grid.
inline QuantizedMesh merge(const QuantizedMesh& kept, const QuantizedMesh& generated) {
  require_same_bins(kept, generated);
  QuantizedMesh out = kept;
  for (const auto& t : generated) out.insert(t);
  return out;
}

inline QuantizedMesh difference(const QuantizedMesh& a, const QuantizedMesh& b) {
  require_same_bins(a, b);
  QuantizedMesh out(a.bins());
  for (const auto& t : a)
    if (!b.contains(t)) out.insert(t);
  return out;
}

inline QuantizedMesh intersection(const QuantizedMesh& a, const QuantizedMesh& b) {
  require_same_bins(a, b);
  QuantizedMesh out(a.bins());
  for (const auto& t : a)
    if (b.contains(t)) out.insert(t);
  return out;
}

inline bool is_subset(const QuantizedMesh& a, const QuantizedMesh& b) {
  return std::all_of(a.begin(), a.end(), [&](const Triangle& t) { return b.contains(t); });
}

inline double triangle_area(const RealTriangle& t) { return 0.5 * norm(cross(t[1] - t[0], t[2] - t[0])); }

/// Draws `count` points uniformly over the surface (area-weighted).
inline std::vector<Vec3> sample_surface(const RealMesh& mesh, std::size_t count, Rng& rng) {
  if (mesh.empty()) throw EmptyMeshError();
  std::vector<double> cumulative;
  cumulative.reserve(mesh.size());
  double total = 0.0;
  for (const auto& t : mesh.triangles) cumulative.push_back(total += triangle_area(t));
  std::vector<Vec3> points;
  points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t idx;
    if (total > 0.0) {
      const double r = uniform(rng, 0.0, total);
      idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
      idx = std::min(idx, mesh.size() - 1);
    } else {
      idx = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(mesh.size()) - 1));
    }
    const auto& t = mesh.triangles[idx];
    double u = uniform(rng, 0.0, 1.0);
    double v = uniform(rng, 0.0, 1.0);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    points.push_back(t[0] + (t[1] - t[0]) * u + (t[2] - t[0]) * v);
  }
  return points;
}

namespace detail {

inline double mean_nearest_squared(std::span<const Vec3> from, std::span<const Vec3> to) {
  double sum = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, squared_distance(p, q));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace detail

/// Symmetric Chamfer distance between point sets: the mean squared distance
/// to the nearest neighbour, averaged over both directions.
inline double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw EmptyMeshError("chamfer distance of an empty point set");
  return 0.5 * (detail::mean_nearest_squared(a, b) + detail::mean_nearest_squared(b, a));
}

/// Chamfer distance over `samples` area-weighted surface points per mesh.
/// Both meshes are sampled from the same seed, so chamfer(m, m) == 0 and the
/// result is symmetric in its arguments.
inline double chamfer_distance(const RealMesh& a, const RealMesh& b, std::size_t samples = 10000,
                               std::uint64_t seed = 0) {
  if (a.empty() || b.empty()) throw EmptyMeshError("chamfer distance of an empty mesh");
  if (samples == 0) throw Error("samples must be at least 1");
  Rng ra(seed);
  Rng rb(seed);
  const auto pa = sample_surface(a, samples, ra);
  const auto pb = sample_surface(b, samples, rb);
  return chamfer_distance(std::span<const Vec3>(pa), std::span<const Vec3>(pb));
}

}  // namespace meshpad
