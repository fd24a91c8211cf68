#pragma once

#include <charconv>
#include <cstdio>
#include <array>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "meshpad/mesh.hpp"

namespace meshpad {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline double parse_double(std::string_view s, std::size_t line) {
  if (s.size() > 1 && s[0] == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(line, "invalid number '" + std::string(s) + "'");
  return value;
}

inline long parse_index(std::string_view s, std::size_t line) {
  const auto slash = s.find('/');
  const std::string_view head = s.substr(0, slash);
  long value = 0;
  const auto res = std::from_chars(head.data(), head.data() + head.size(), value);
  if (head.empty() || res.ec != std::errc() || res.ptr != head.data() + head.size() || value == 0)
    throw ParseError(line, "invalid face index '" + std::string(s) + "'");
  return value;
}

}  // namespace detail

/// Parses Wavefront OBJ text. Only `v` and `f` records matter; polygons are
/// fan-triangulated, other records are ignored.
inline RealMesh parse_obj(std::istream& in) {
  RealMesh mesh;
  std::vector<Vec3> vertices;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto fields = detail::split_ws(view);
    if (fields.empty()) continue;
    if (fields[0] == "v") {
      if (fields.size() < 4) throw ParseError(line_no, "vertex needs 3 coordinates");
      vertices.push_back({detail::parse_double(fields[1], line_no), detail::parse_double(fields[2], line_no),
                          detail::parse_double(fields[3], line_no)});
    } else if (fields[0] == "f") {
      if (fields.size() < 4) throw ParseError(line_no, "face needs at least 3 vertices");
      std::vector<std::size_t> idx;
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const long raw = detail::parse_index(fields[i], line_no);
        const long resolved = raw > 0 ? raw - 1 : static_cast<long>(vertices.size()) + raw;
        if (resolved < 0 || resolved >= static_cast<long>(vertices.size()))
          throw ParseError(line_no, "face index " + std::to_string(raw) + " out of range");
        idx.push_back(static_cast<std::size_t>(resolved));
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i)
        mesh.triangles.push_back({vertices[idx[0]], vertices[idx[i]], vertices[idx[i + 1]]});
    }
  }
  return mesh;
}

inline RealMesh parse_obj(const std::string& text) {
  std::istringstream in(text);
  return parse_obj(in);
}

inline RealMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_obj(in);
}

/// Writes shared `v` records and 1-based `f` records. Coordinates are printed
/// with round-trip precision.
inline void write_obj(std::ostream& out, const RealMesh& mesh) {
  struct VecHash {
    std::size_t operator()(const Vec3& v) const {
      const std::hash<double> h;
      return h(v.x) ^ (h(v.y) * 31u) ^ (h(v.z) * 1009u);
    }
  };
  std::unordered_map<Vec3, std::size_t, VecHash> index;
  std::vector<Vec3> order;
  std::vector<std::array<std::size_t, 3>> faces;
  for (const auto& t : mesh.triangles) {
    std::array<std::size_t, 3> f{};
    for (int i = 0; i < 3; ++i) {
      auto [it, inserted] = index.try_emplace(t[i], order.size() + 1);
      if (inserted) order.push_back(t[i]);
      f[i] = it->second;
    }
    faces.push_back(f);
  }
  char buf[96];
  for (const auto& v : order) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& f : faces) out << "f " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline std::string to_obj_string(const RealMesh& mesh) {
  std::ostringstream out;
  write_obj(out, mesh);
  return out.str();
}

inline void save_obj(const RealMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_obj(out, mesh);
}

}  // namespace meshpad
