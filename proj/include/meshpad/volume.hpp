#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "meshpad/mesh.hpp"

namespace meshpad {

enum class RegionKind { LowHalf, HighHalf, Slab, AntiSlab };

inline constexpr double kParamAMin = 0.2, kParamAMax = 0.8;
inline constexpr double kParamBMin = 0.4, kParamBMax = 0.6;
inline constexpr double kParamCMin = 0.1, kParamCMax = 0.4;

/// Closed 1-D interval; bounds may be infinite.
struct Interval {
  double lo;
  double hi;
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
};

/// {p : p[axis] in R} where R is one of (-inf, a], [a, +inf), [b-c, b+c], or
/// (-inf, b-c] U [b+c, +inf).
struct AxisRegion {
  int axis = 0;
  RegionKind kind = RegionKind::LowHalf;
  double a = 0.5;
  double b = 0.5;
  double c = 0.25;

  std::vector<Interval> intervals() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind) {
      case RegionKind::LowHalf:
        return {{-inf, a}};
      case RegionKind::HighHalf:
        return {{a, inf}};
      case RegionKind::Slab:
        return {{b - c, b + c}};
      case RegionKind::AntiSlab:
        return {{-inf, b - c}, {b + c, inf}};
    }
    return {};
  }

  bool contains_value(double v) const {
    switch (kind) {
      case RegionKind::LowHalf:
        return v <= a;
      case RegionKind::HighHalf:
        return v >= a;
      case RegionKind::Slab:
        return b - c <= v && v <= b + c;
      case RegionKind::AntiSlab:
        return v <= b - c || v >= b + c;
    }
    return false;
  }

  bool contains(Vec3 p) const { return contains_value(p[axis]); }
};

/// Exact test of `inner` being a subset of `outer`. Regions on different axes
/// are never nested because no candidate region is empty or all of space;
/// on a shared axis this reduces to 1-D interval-union containment.
inline bool region_contains(const AxisRegion& outer, const AxisRegion& inner) {
  if (outer.axis != inner.axis) return false;
  const auto out_iv = outer.intervals();
  for (const auto& piece : inner.intervals()) {
    const bool covered = std::any_of(out_iv.begin(), out_iv.end(), [&](const Interval& o) { return o.contains(piece); });
    if (!covered) return false;
  }
  return true;
}

/// Union of axis regions, or all of space.
struct SampleVolume {
  bool everything = false;
  std::vector<AxisRegion> regions;

  static SampleVolume all() { return {true, {}}; }

  bool contains(Vec3 p) const {
    return everything || std::any_of(regions.begin(), regions.end(), [&](const AxisRegion& r) { return r.contains(p); });
  }
};

inline AxisRegion sample_region(Rng& rng) {
  AxisRegion r;
  r.axis = uniform_int(rng, 0, 2);
  r.kind = static_cast<RegionKind>(uniform_int(rng, 0, 3));
  r.a = uniform(rng, kParamAMin, kParamAMax);
  r.b = uniform(rng, kParamBMin, kParamBMax);
  r.c = uniform(rng, kParamCMin, kParamCMax);
  return r;
}

struct VolumePair {
  AxisRegion region_a;
  AxisRegion region_b;
  SampleVolume target;  // L = L_a U L_b
  SampleVolume kept;    // L_k = L_a
  bool b_inside_a = false;
};

/// Draws L_a and L_b. When L_b lies inside L_a the target volume is widened to
/// all of space so the edited part is not trivially empty.
inline VolumePair volume_pair_from_regions(const AxisRegion& a, const AxisRegion& b) {
  VolumePair p{a, b, {}, {false, {a}}, region_contains(a, b)};
  p.target = p.b_inside_a ? SampleVolume::all() : SampleVolume{false, {a, b}};
  return p;
}

inline VolumePair sample_volume_pair(Rng& rng) {
  const AxisRegion a = sample_region(rng);
  const AxisRegion b = sample_region(rng);
  return volume_pair_from_regions(a, b);
}

/// Triangles with at least one vertex inside the volume.
inline QuantizedMesh crop(const QuantizedMesh& mesh, const SampleVolume& volume) {
  if (volume.everything) return mesh;
  QuantizedMesh out(mesh.bins());
  for (const auto& t : mesh) {
    const bool hit = std::any_of(t.begin(), t.end(),
                                 [&](const QuantizedVertex& v) { return volume.contains(dequantize_point(v, mesh.bins())); });
    if (hit) out.insert(t);
  }
  return out;
}

inline RealMesh crop(const RealMesh& mesh, const SampleVolume& volume) {
  RealMesh out;
  for (const auto& t : mesh.triangles)
    if (volume.contains(t[0]) || volume.contains(t[1]) || volume.contains(t[2])) out.triangles.push_back(t);
  return out;
}

inline const char* region_kind_name(RegionKind k) {
  switch (k) {
    case RegionKind::LowHalf:
      return "low_half";
    case RegionKind::HighHalf:
      return "high_half";
    case RegionKind::Slab:
      return "slab";
    case RegionKind::AntiSlab:
      return "anti_slab";
  }
  return "?";
}

inline nlohmann::json region_to_json(const AxisRegion& r) {
  return {{"axis", r.axis}, {"kind", region_kind_name(r.kind)}, {"a", r.a}, {"b", r.b}, {"c", r.c}};
}

inline nlohmann::json volume_to_json(const SampleVolume& v) {
  if (v.everything) return "everything";
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : v.regions) arr.push_back(region_to_json(r));
  return arr;
}

}  // namespace meshpad
