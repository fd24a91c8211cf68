#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "meshpad/mesh.hpp"

namespace meshpad::procedural {

/// Appends the 12 triangles of an axis-aligned box.
inline void add_box(RealMesh& out, Vec3 lo, Vec3 hi) {
  const Vec3 c[8] = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                     {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
  const int quads[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {2, 3, 7, 6}, {1, 2, 6, 5}, {0, 4, 7, 3}};
  for (const auto& q : quads) {
    out.triangles.push_back({c[q[0]], c[q[1]], c[q[2]]});
    out.triangles.push_back({c[q[0]], c[q[2]], c[q[3]]});
  }
}

inline RealMesh box(Vec3 lo = {0, 0, 0}, Vec3 hi = {1, 1, 1}) {
  RealMesh m;
  add_box(m, lo, hi);
  return m;
}

/// Slab top on four legs.
inline RealMesh table(Rng& rng) {
  RealMesh m;
  const double top = uniform(rng, 0.6, 0.9);
  const double thick = uniform(rng, 0.05, 0.12);
  const double leg = uniform(rng, 0.06, 0.14);
  const double depth = uniform(rng, 0.5, 1.0);
  add_box(m, {0, top, 0}, {1, top + thick, depth});
  for (double x : {0.0, 1.0 - leg})
    for (double z : {0.0, depth - leg}) add_box(m, {x, 0, z}, {x + leg, top, z + leg});
  return m;
}

/// Table with a back rest.
inline RealMesh chair(Rng& rng) {
  RealMesh m;
  const double seat = uniform(rng, 0.35, 0.5);
  const double thick = uniform(rng, 0.04, 0.08);
  const double leg = uniform(rng, 0.06, 0.1);
  add_box(m, {0, seat, 0}, {1, seat + thick, 1});
  for (double x : {0.0, 1.0 - leg})
    for (double z : {0.0, 1.0 - leg}) add_box(m, {x, 0, z}, {x + leg, seat, z + leg});
  add_box(m, {0, seat + thick, 1.0 - thick}, {1, uniform(rng, 0.9, 1.3), 1});
  return m;
}

/// Closed prism with `segments` sides and fan caps.
inline RealMesh cylinder(int segments, double height = 1.0) {
  RealMesh m;
  const Vec3 bottom{0, 0, 0};
  const Vec3 top{0, height, 0};
  for (int i = 0; i < segments; ++i) {
    const double a0 = 2.0 * std::numbers::pi * i / segments;
    const double a1 = 2.0 * std::numbers::pi * (i + 1) / segments;
    const Vec3 p0{std::cos(a0), 0, std::sin(a0)};
    const Vec3 p1{std::cos(a1), 0, std::sin(a1)};
    const Vec3 q0{p0.x, height, p0.z};
    const Vec3 q1{p1.x, height, p1.z};
    m.triangles.push_back({p0, q0, p1});
    m.triangles.push_back({p1, q0, q1});
    m.triangles.push_back({bottom, p0, p1});
    m.triangles.push_back({top, q1, q0});
  }
  return m;
}

/// Height-field sheet with nx*ny quads.
inline RealMesh grid(int nx, int ny, Rng& rng, double bump = 0.1) {
  std::vector<double> h(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (auto& v : h) v = uniform(rng, 0.0, bump);
  auto at = [&](int i, int j) {
    return Vec3{static_cast<double>(i) / nx, h[static_cast<std::size_t>(j * (nx + 1) + i)], static_cast<double>(j) / ny};
  };
  RealMesh m;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.triangles.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
      m.triangles.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
    }
  return m;
}

/// A mixed toy shape: box, table, chair, cylinder or sheet.
inline RealMesh toy_shape(Rng& rng) {
  switch (uniform_int(rng, 0, 4)) {
    case 0:
      return box({0, 0, 0}, {uniform(rng, 0.3, 1.0), uniform(rng, 0.3, 1.0), uniform(rng, 0.3, 1.0)});
    case 1:
      return table(rng);
    case 2:
      return chair(rng);
    case 3:
      return cylinder(uniform_int(rng, 6, 24), uniform(rng, 0.5, 2.0));
    default:
      return grid(uniform_int(rng, 2, 10), uniform_int(rng, 2, 10), rng);
  }
}

inline std::vector<RealMesh> toy_corpus(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RealMesh> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(normalize_to_unit_cube(toy_shape(rng)));
  return out;
}

inline QuantizedVertex random_vertex(Rng& rng, int bins) {
  return {uniform_int(rng, 0, bins - 1), uniform_int(rng, 0, bins - 1), uniform_int(rng, 0, bins - 1)};
}

/// Quantized test mesh with exactly `faces` triangles (faces <= 768 keeps the
/// generators well inside the grid). Styles: manifold height-field sheet,
/// random soup, and fans of triangles sharing one edge (non-manifold).
inline QuantizedMesh random_mesh(Rng& rng, int bins, std::size_t faces, int style = -1) {
  if (style < 0) style = uniform_int(rng, 0, 2);
  std::vector<Triangle> pool;
  if (style == 0) {
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(faces) / 2.0))) + 1;
    const int step = std::max(1, (bins - 1) / side);
    auto v = [&](int i, int j) {
      return QuantizedVertex{i * step, uniform_int(rng, 0, bins - 1), j * step};
    };
    std::vector<QuantizedVertex> pts;
    for (int j = 0; j <= side; ++j)
      for (int i = 0; i <= side; ++i) pts.push_back(v(i, j));
    auto at = [&](int i, int j) { return pts[static_cast<std::size_t>(j * (side + 1) + i)]; };
    for (int j = 0; j < side; ++j)
      for (int i = 0; i < side; ++i) {
        pool.emplace_back(at(i, j), at(i + 1, j), at(i + 1, j + 1));
        pool.emplace_back(at(i, j), at(i + 1, j + 1), at(i, j + 1));
      }
  }
  QuantizedMesh m(bins);
  for (const auto& t : pool) {
    if (m.size() == faces) break;
    m.insert(t);
  }
  while (m.size() < faces) {
    if (style == 2 || (style == 1 && uniform_int(rng, 0, 3) == 0)) {
      const QuantizedVertex a = random_vertex(rng, bins);
      const QuantizedVertex b = random_vertex(rng, bins);
      const int fan = uniform_int(rng, 3, 6);
      for (int k = 0; k < fan && m.size() < faces; ++k) m.insert(a, b, random_vertex(rng, bins));
    } else {
      m.insert(random_vertex(rng, bins), random_vertex(rng, bins), random_vertex(rng, bins));
    }
  }
  return m;
}

struct AdditionCase {
  QuantizedMesh kept;
  QuantizedMesh added;
};

/// Decoding workload: bumpy sheets split across x, so the added half is a few
/// long strips (vertex-dominated token streams of several hundred tokens).
inline std::vector<AdditionCase> addition_workload(std::size_t count, std::uint64_t seed, int bins = kDefaultBins) {
  Rng rng(seed);
  std::vector<AdditionCase> out;
  for (std::size_t i = 0; i < count; ++i) {
    const QuantizedMesh sheet = quantize(normalize_to_unit_cube(grid(uniform_int(rng, 14, 18), uniform_int(rng, 14, 18), rng, 0.3)), bins);
    AdditionCase c{QuantizedMesh(bins), QuantizedMesh(bins)};
    for (const auto& t : sheet) {
      const bool left = std::all_of(t.begin(), t.end(), [&](const QuantizedVertex& v) { return v.x <= bins / 2; });
      (left ? c.kept : c.added).insert(t);
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace meshpad::procedural
