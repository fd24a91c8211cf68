#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "meshpad/mesh.hpp"

namespace meshpad {

/// Topology counters: face count, connected components (vertex-shared),
/// fraction of edges with more than two incident faces, and the number of
/// properly intersecting triangle pairs that share no vertex.
struct MeshStats {
  std::size_t faces = 0;
  std::size_t components = 0;
  double nonmanifold_edge_fraction = 0.0;
  std::size_t self_intersections = 0;
};

namespace detail {

using Edge = std::pair<QuantizedVertex, QuantizedVertex>;

inline Edge make_edge(QuantizedVertex a, QuantizedVertex b) { return a < b ? Edge{a, b} : Edge{b, a}; }

inline std::int64_t orient3d(const QuantizedVertex& a, const QuantizedVertex& b, const QuantizedVertex& c,
                             const QuantizedVertex& d) {
  const std::int64_t ax = a.x - d.x, ay = a.y - d.y, az = a.z - d.z;
  const std::int64_t bx = b.x - d.x, by = b.y - d.y, bz = b.z - d.z;
  const std::int64_t cx = c.x - d.x, cy = c.y - d.y, cz = c.z - d.z;
  return ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx);
}

inline int sign(std::int64_t v) { return (v > 0) - (v < 0); }

// Proper crossing of segment pq through the interior of triangle t.
inline bool segment_crosses_triangle(const QuantizedVertex& p, const QuantizedVertex& q, const Triangle& t) {
  const int sp = sign(orient3d(t[0], t[1], t[2], p));
  const int sq = sign(orient3d(t[0], t[1], t[2], q));
  if (sp == 0 || sq == 0 || sp == sq) return false;
  const int s1 = sign(orient3d(p, q, t[0], t[1]));
  const int s2 = sign(orient3d(p, q, t[1], t[2]));
  const int s3 = sign(orient3d(p, q, t[2], t[0]));
  return s1 != 0 && s1 == s2 && s2 == s3;
}

inline bool triangles_intersect(const Triangle& a, const Triangle& b) {
  for (int i = 0; i < 3; ++i) {
    if (segment_crosses_triangle(a[i], a[(i + 1) % 3], b)) return true;
    if (segment_crosses_triangle(b[i], b[(i + 1) % 3], a)) return true;
  }
  return false;
}

}  // namespace detail

inline MeshStats mesh_stats(const QuantizedMesh& mesh) {
  MeshStats s;
  s.faces = mesh.size();
  const std::vector<Triangle> tris(mesh.begin(), mesh.end());

  std::map<QuantizedVertex, std::size_t> vid;
  for (const auto& t : tris)
    for (const auto& v : t) vid.try_emplace(v, vid.size());
  std::vector<std::size_t> parent(vid.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& t : tris) {
    const auto r0 = find(vid[t[0]]);
    parent[find(vid[t[1]])] = r0;
    parent[find(vid[t[2]])] = r0;
  }
  for (std::size_t i = 0; i < parent.size(); ++i) s.components += find(i) == i;

  std::map<detail::Edge, int> edges;
  for (const auto& t : tris)
    for (int i = 0; i < 3; ++i) ++edges[detail::make_edge(t[i], t[(i + 1) % 3])];
  std::size_t nonmanifold = 0;
  for (const auto& [e, n] : edges) nonmanifold += n > 2;
  s.nonmanifold_edge_fraction = edges.empty() ? 0.0 : static_cast<double>(nonmanifold) / edges.size();

  for (std::size_t i = 0; i < tris.size(); ++i) {
    for (std::size_t j = i + 1; j < tris.size(); ++j) {
      bool shared = false;
      for (const auto& v : tris[i]) shared = shared || tris[j].has_vertex(v);
      if (!shared && detail::triangles_intersect(tris[i], tris[j])) ++s.self_intersections;
    }
  }
  return s;
}

}  // namespace meshpad
