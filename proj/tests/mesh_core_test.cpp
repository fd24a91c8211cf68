#include <gtest/gtest.h>

#include <algorithm>

#include "meshpad/mesh.hpp"
#include "meshpad/mesh_stats.hpp"
#include "meshpad/procedural.hpp"

using namespace meshpad;

namespace {

RealMesh one_triangle(Vec3 a, Vec3 b, Vec3 c) { return RealMesh{{{a, b, c}}}; }

void expect_vec_near(Vec3 a, Vec3 b, double tol = 1e-12) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

// Independent prune: scan every triangle against every deleted vertex.
std::pair<std::vector<Triangle>, std::vector<Triangle>> scan_prune(const QuantizedMesh& m, const VertexSet& del) {
  std::vector<Triangle> removed, kept;
  for (const auto& t : m) {
    bool hit = false;
    for (int i = 0; i < 3; ++i)
      for (const auto& v : del) hit = hit || (t[i].x == v.x && t[i].y == v.y && t[i].z == v.z);
    (hit ? removed : kept).push_back(t);
  }
  return {removed, kept};
}

}  // namespace

TEST(Normalize, CubeMapsToUnitCube) {
  const auto m = normalize_to_unit_cube(procedural::box({2, 2, 2}, {4, 4, 4}));
  const auto b = bounds(m);
  expect_vec_near(b.min, {0, 0, 0});
  expect_vec_near(b.max, {1, 1, 1});
}

TEST(Normalize, FlatPlateIsCentered) {
  RealMesh plate;
  plate.triangles.push_back({Vec3{0, 0, 0}, Vec3{10, 0, 0}, Vec3{10, 5, 0}});
  plate.triangles.push_back({Vec3{0, 0, 0}, Vec3{10, 5, 0}, Vec3{0, 5, 0}});
  const auto b = bounds(normalize_to_unit_cube(plate));
  // scale 1/10, centre (5, 2.5, 0) -> (0.5, 0.5, 0.5)
  expect_vec_near(b.min, {0, 0.25, 0.5});
  expect_vec_near(b.max, {1, 0.75, 0.5});
}

TEST(Normalize, Idempotent) {
  Rng rng(3);
  const auto once = normalize_to_unit_cube(procedural::chair(rng));
  const auto twice = normalize_to_unit_cube(once);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i)
    for (int k = 0; k < 3; ++k) expect_vec_near(once.triangles[i][k], twice.triangles[i][k], 1e-12);
}

TEST(Normalize, EmptyThrows) { EXPECT_THROW(normalize_to_unit_cube(RealMesh{}), EmptyMeshError); }

TEST(Quantize, HalfRoundsUp) {
  EXPECT_EQ(quantize_point({0.0, 0.5, 1.0}, 128), (QuantizedVertex{0, 64, 127}));
}

TEST(Quantize, CollapsedTriangleDropped) {
  QuantizeStats stats;
  const auto q = quantize(one_triangle({0.5, 0.5, 0.5}, {0.501, 0.5, 0.5}, {0.5, 0.502, 0.5}), 128, &stats);
  EXPECT_TRUE(q.empty());
  EXPECT_EQ(stats.degenerate_dropped, 1u);
}

TEST(Quantize, CoincidingTrianglesMerge) {
  RealMesh m = one_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  m.triangles.push_back({Vec3{0.001, 0, 0}, Vec3{0, 1, 0}, Vec3{1, 0.001, 0}});
  QuantizeStats stats;
  EXPECT_EQ(quantize(m, 128, &stats).size(), 1u);
  EXPECT_EQ(stats.duplicates_merged, 1u);
}

TEST(Quantize, Monotone) {
  for (int bins : {2, 16, 128, 1024}) {
    int prev = 0;
    for (int i = 0; i <= 1000; ++i) {
      const int q = quantize_coordinate(i / 1000.0, bins);
      EXPECT_GE(q, prev);
      EXPECT_LT(q, bins);
      prev = q;
    }
  }
}

TEST(QuantizedMesh, RejectsOutOfRangeAndDegenerate) {
  QuantizedMesh m(8);
  EXPECT_THROW(m.insert({0, 0, 0}, {8, 0, 0}, {0, 1, 0}), Error);
  EXPECT_FALSE(m.insert({1, 1, 1}, {1, 1, 1}, {0, 1, 0}));
  EXPECT_TRUE(m.insert({0, 0, 0}, {1, 0, 0}, {0, 1, 0}));
  EXPECT_FALSE(m.insert({0, 1, 0}, {0, 0, 0}, {1, 0, 0}));  // same set, other order
  EXPECT_EQ(m.size(), 1u);
}

TEST(Triangle, CanonicalOrderIgnoresWinding) {
  const Triangle a({3, 0, 1}, {0, 0, 0}, {1, 2, 0});
  const Triangle b({1, 2, 0}, {3, 0, 1}, {0, 0, 0});
  EXPECT_EQ(a, b);
  // (z, y, x) ascending
  EXPECT_EQ(a[0], (QuantizedVertex{0, 0, 0}));
  EXPECT_EQ(a[1], (QuantizedVertex{1, 2, 0}));
  EXPECT_EQ(a[2], (QuantizedVertex{3, 0, 1}));
}

TEST(Prune, SharedVertexRemovesBoth) {
  QuantizedMesh m(16);
  const QuantizedVertex v{5, 5, 5};
  m.insert(v, {6, 5, 5}, {5, 6, 5});
  m.insert(v, {4, 5, 5}, {5, 4, 5});
  const auto r = prune(m, {v});
  EXPECT_EQ(r.removed.size(), 2u);
  EXPECT_TRUE(r.kept.empty());
}

TEST(Prune, EmptySetIsIdentity) {
  Rng rng(1);
  const auto m = procedural::random_mesh(rng, 64, 40);
  const auto r = prune(m, {});
  EXPECT_TRUE(r.removed.empty());
  EXPECT_EQ(r.kept, m);
}

TEST(Prune, InteriorVertexOfDegreeFour) {
  // 3x2 quad sheet split into 10 triangles; the vertex at (1,1) touches 4 of them.
  QuantizedMesh m(16);
  auto p = [](int i, int j) { return QuantizedVertex{i, j, 0}; };
  m.insert(p(0, 0), p(1, 0), p(1, 1));
  m.insert(p(0, 0), p(1, 1), p(0, 1));
  m.insert(p(1, 0), p(2, 0), p(1, 1));
  m.insert(p(2, 0), p(2, 1), p(1, 1));
  m.insert(p(2, 0), p(3, 0), p(3, 1));
  m.insert(p(2, 0), p(3, 1), p(2, 1));
  m.insert(p(0, 1), p(1, 2), p(0, 2));
  m.insert(p(0, 1), p(2, 2), p(1, 2));
  m.insert(p(2, 1), p(3, 1), p(3, 2));
  m.insert(p(2, 1), p(3, 2), p(2, 2));
  ASSERT_EQ(m.size(), 10u);
  const auto expected = scan_prune(m, {p(1, 1)});
  ASSERT_EQ(expected.first.size(), 4u);
  const auto r = prune(m, {p(1, 1)});
  EXPECT_EQ(r.removed.size(), 4u);
  for (const auto& t : expected.first) EXPECT_TRUE(r.removed.contains(t));
}

TEST(Prune, PartitionAndMergeInverseAgainstScan) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = procedural::random_mesh(rng, 32, 1 + uniform_int(rng, 0, 120));
    VertexSet del;
    const auto verts = m.vertices();
    for (const auto& v : verts)
      if (uniform_int(rng, 0, 9) == 0) del.insert(v);
    const auto r = prune(m, del);
    const auto [removed, kept] = scan_prune(m, del);
    EXPECT_EQ(r.removed.size(), removed.size());
    EXPECT_EQ(r.kept.size(), kept.size());
    for (const auto& t : removed) EXPECT_TRUE(r.removed.contains(t));
    EXPECT_TRUE(intersection(r.removed, r.kept).empty());
    EXPECT_EQ(merge(r.kept, r.removed), m);
  }
}

TEST(Merge, Identities) {
  Rng rng(5);
  const auto m = procedural::random_mesh(rng, 64, 30);
  const QuantizedMesh empty(64);
  EXPECT_EQ(merge(m, empty), m);
  EXPECT_EQ(merge(empty, m), m);
}

TEST(Merge, SharedTrianglesCountOnce) {
  QuantizedMesh a(32), b(32);
  auto t = [](int k) { return Triangle({k, 0, 0}, {k + 1, 0, 0}, {k, 1, 0}); };
  for (int k = 0; k < 5; ++k) a.insert(t(k));
  for (int k = 3; k < 7; ++k) b.insert(t(k));
  // 5 + 4 - |{3, 4}|
  EXPECT_EQ(merge(a, b).size(), 7u);
}

TEST(Merge, BinsMismatchThrows) { EXPECT_THROW(merge(QuantizedMesh(16), QuantizedMesh(32)), Error); }

TEST(Chamfer, SinglePointPair) {
  const std::vector<Vec3> a{{0, 0, 0}};
  const std::vector<Vec3> b{{1, 0, 0}};
  EXPECT_DOUBLE_EQ(chamfer_distance(a, b), 1.0);
}

TEST(Chamfer, SelfDistanceIsZero) {
  Rng rng(9);
  const auto m = normalize_to_unit_cube(procedural::table(rng));
  EXPECT_LE(chamfer_distance(m, m, 2000), 1e-12);
}

TEST(Chamfer, ParallelSquaresOffsetByD) {
  const double d = 0.3;
  auto square = [](double z) {
    RealMesh s;
    s.triangles.push_back({Vec3{0, 0, z}, Vec3{1, 0, z}, Vec3{1, 1, z}});
    s.triangles.push_back({Vec3{0, 0, z}, Vec3{1, 1, z}, Vec3{0, 1, z}});
    return s;
  };
  EXPECT_NEAR(chamfer_distance(square(0), square(d), 2000), d * d, 1e-3);
}

TEST(Chamfer, Symmetric) {
  Rng rng(11);
  const auto a = normalize_to_unit_cube(procedural::chair(rng));
  const auto b = normalize_to_unit_cube(procedural::table(rng));
  EXPECT_NEAR(chamfer_distance(a, b, 2000), chamfer_distance(b, a, 2000), 1e-12);
}

TEST(Chamfer, EmptyThrows) { EXPECT_THROW(chamfer_distance(RealMesh{}, procedural::box(), 10), Error); }

TEST(MeshStats, CountsComponentsAndNonManifoldEdges) {
  QuantizedMesh m(32);
  // Three triangles on one edge (non-manifold) plus a detached triangle.
  m.insert({0, 0, 0}, {4, 0, 0}, {0, 4, 0});
  m.insert({0, 0, 0}, {4, 0, 0}, {0, 0, 4});
  m.insert({0, 0, 0}, {4, 0, 0}, {2, 2, 2});
  m.insert({20, 20, 20}, {21, 20, 20}, {20, 21, 20});
  const auto s = mesh_stats(m);
  EXPECT_EQ(s.faces, 4u);
  EXPECT_EQ(s.components, 2u);
  // edges: shared one + 2 per fan triangle + 3 detached = 1 + 6 + 3 = 10
  EXPECT_DOUBLE_EQ(s.nonmanifold_edge_fraction, 1.0 / 10.0);
}

TEST(MeshStats, DetectsCrossingTriangles) {
  QuantizedMesh m(32);
  m.insert({0, 0, 5}, {10, 0, 5}, {0, 10, 5});
  m.insert({2, 2, 0}, {3, 2, 10}, {2, 3, 10});
  EXPECT_EQ(mesh_stats(m).self_intersections, 1u);
  QuantizedMesh box = quantize(normalize_to_unit_cube(procedural::box()), 16);
  EXPECT_EQ(mesh_stats(box).self_intersections, 0u);
  EXPECT_EQ(mesh_stats(box).nonmanifold_edge_fraction, 0.0);
}
