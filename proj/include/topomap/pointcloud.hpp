#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "topomap/common.hpp"

namespace topomap {

/// A 3D point in millimeters. Coordinates are finite by construction of the
/// loaders; nothing else is assumed.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct PointCloud {
  std::vector<Point3> points;

  std::size_t count() const { return points.size(); }
};

namespace detail {

inline void check_finite(const Point3& p, std::size_t index) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
    fail(errc::non_finite_coordinate, "non-finite coordinate at point index " + std::to_string(index));
}

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64" || t == "int64" || t == "uint64") return 8;
  fail(errc::malformed_header, "unknown ply property type '" + t + "'");
}

inline bool ply_is_real(const std::string& t) {
  return t == "float" || t == "float32" || t == "double" || t == "float64";
}

struct PlyProperty {
  std::string type;
  std::string name;
  bool is_list = false;
  std::string list_count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

}  // namespace detail

/// Parses ascii or binary_little_endian PLY. Only the vertex element is
/// consumed; color, normals and any trailing elements are skipped.
inline PointCloud load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");

  auto read_line = [&in](std::string& line) -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  std::string line;
  if (!read_line(line) || line != "ply") fail(errc::malformed_header, "missing 'ply' magic in '" + path + "'");

  enum class Fmt { none, ascii, binary_le } fmt = Fmt::none;
  std::vector<detail::PlyElement> elements;
  bool saw_end = false;
  while (read_line(line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string f, version;
      ls >> f >> version;
      if (f == "ascii") fmt = Fmt::ascii;
      else if (f == "binary_little_endian") fmt = Fmt::binary_le;
      else if (f == "binary_big_endian") fail(errc::unsupported_format, "binary_big_endian ply is not supported");
      else fail(errc::unsupported_format, "unknown ply format '" + f + "'");
    } else if (kw == "element") {
      detail::PlyElement el;
      long long n = -1;
      ls >> el.name >> n;
      if (el.name.empty() || n < 0) fail(errc::malformed_header, "bad element line '" + line + "'");
      el.count = static_cast<std::size_t>(n);
      elements.push_back(el);
    } else if (kw == "property") {
      if (elements.empty()) fail(errc::malformed_header, "property before any element");
      detail::PlyProperty prop;
      std::string t;
      ls >> t;
      if (t == "list") {
        prop.is_list = true;
        ls >> prop.list_count_type >> prop.type >> prop.name;
      } else {
        prop.type = t;
        ls >> prop.name;
      }
      if (prop.name.empty() || prop.type.empty()) fail(errc::malformed_header, "bad property line '" + line + "'");
      elements.back().properties.push_back(prop);
    } else if (kw == "end_header") {
      saw_end = true;
      break;
    } else {
      fail(errc::malformed_header, "unexpected header line '" + line + "'");
    }
  }
  if (!saw_end) fail(errc::malformed_header, "missing end_header");
  if (fmt == Fmt::none) fail(errc::malformed_header, "missing format line");

  std::size_t vertex_index = elements.size();
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i].name == "vertex") { vertex_index = i; break; }
  if (vertex_index == elements.size()) fail(errc::missing_coordinate_property, "no vertex element");

  const detail::PlyElement& vertex = elements[vertex_index];
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
    const auto& p = vertex.properties[i];
    if (p.is_list) continue;
    if (p.name == "x" && detail::ply_is_real(p.type)) ix = static_cast<int>(i);
    if (p.name == "y" && detail::ply_is_real(p.type)) iy = static_cast<int>(i);
    if (p.name == "z" && detail::ply_is_real(p.type)) iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0)
    fail(errc::missing_coordinate_property, "vertex element lacks float/double x, y, z");

  PointCloud cloud;
  cloud.points.reserve(vertex.count);

  if (fmt == Fmt::ascii) {
    for (std::size_t e = 0; e < elements.size(); ++e) {
      const auto& el = elements[e];
      for (std::size_t r = 0; r < el.count; ++r) {
        if (!read_line(line)) fail(errc::truncated_body, "expected " + std::to_string(el.count) + " rows of element '" + el.name + "'");
        if (e != vertex_index) continue;
        std::istringstream ls(line);
        std::vector<double> vals(el.properties.size());
        std::string tok;
        for (std::size_t c = 0; c < el.properties.size(); ++c) {
          if (!(ls >> tok)) fail(errc::truncated_body, "short vertex row " + std::to_string(r));
          std::size_t used = 0;
          try {
            vals[c] = std::stod(tok, &used);  // stod parses nan/inf; check_finite rejects them by index
          } catch (const std::exception&) {
            used = std::string::npos;
          }
          if (used != tok.size())
            fail(errc::parse_error, "bad vertex value '" + tok + "' in row " + std::to_string(r));
        }
        Point3 p{vals[static_cast<std::size_t>(ix)], vals[static_cast<std::size_t>(iy)], vals[static_cast<std::size_t>(iz)]};
        detail::check_finite(p, r);
        cloud.points.push_back(p);
      }
      if (e == vertex_index) break;  // nothing after the vertex element is needed
    }
  } else {
    for (std::size_t e = 0; e <= vertex_index; ++e) {
      const auto& el = elements[e];
      std::size_t row_size = 0;
      for (const auto& p : el.properties) {
        if (p.is_list) {
          if (e != vertex_index)
            fail(errc::unsupported_format, "binary list property before the vertex element");
          continue;  // lists on the vertex element itself are not consumed
        }
        row_size += detail::ply_type_size(p.type);
      }
      if (e != vertex_index) {
        in.seekg(static_cast<std::streamoff>(row_size * el.count), std::ios::cur);
        continue;
      }
      for (const auto& p : el.properties)
        if (p.is_list) fail(errc::unsupported_format, "list property on vertex element");
      std::vector<unsigned char> row(row_size);
      std::vector<std::size_t> offsets(el.properties.size(), 0);
      std::size_t off = 0;
      for (std::size_t c = 0; c < el.properties.size(); ++c) {
        offsets[c] = off;
        off += detail::ply_type_size(el.properties[c].type);
      }
      auto read_real = [&row, &offsets, &el](int c) -> double {
        const auto& t = el.properties[static_cast<std::size_t>(c)].type;
        const unsigned char* src = row.data() + offsets[static_cast<std::size_t>(c)];
        if (t == "float" || t == "float32") return static_cast<double>(detail::load_le<float>(src));
        return detail::load_le<double>(src);
      };
      for (std::size_t r = 0; r < el.count; ++r) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (static_cast<std::size_t>(in.gcount()) != row.size())
          fail(errc::truncated_body, "vertex " + std::to_string(r) + " of " + std::to_string(el.count) + " missing");
        Point3 p{read_real(ix), read_real(iy), read_real(iz)};
        detail::check_finite(p, r);
        cloud.points.push_back(p);
      }
    }
  }
  return cloud;
}

enum class PlyFormat { ascii, binary_le };

/// Writes a cloud as a PLY vertex element with double x, y, z. Binary output
/// round-trips coordinates bit-exactly; ascii keeps 9 significant digits.
inline void write_ply(const std::string& path, const PointCloud& cloud, PlyFormat format = PlyFormat::binary_le) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  out << "ply\n";
  out << "format " << (format == PlyFormat::ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
  out << "element vertex " << cloud.count() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "end_header\n";
  if (format == PlyFormat::ascii) {
    char buf[96];
    for (const Point3& p : cloud.points) {
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x, p.y, p.z);
      out << buf;
    }
  } else {
    unsigned char row[24];
    for (const Point3& p : cloud.points) {
      detail::store_le<double>(row, p.x);
      detail::store_le<double>(row + 8, p.y);
      detail::store_le<double>(row + 16, p.z);
      out.write(reinterpret_cast<const char*>(row), 24);
    }
  }
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

/// Whitespace-separated text, first three columns are x y z, '#' comments.
inline PointCloud load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double v[3];
    for (int c = 0; c < 3; ++c) {
      std::string tok;
      if (!(ls >> tok)) fail(errc::parse_error, "line " + std::to_string(line_no) + ": fewer than 3 columns");
      std::size_t used = 0;
      try {
        v[c] = std::stod(tok, &used);
      } catch (const std::exception&) {
        fail(errc::parse_error, "line " + std::to_string(line_no) + ": non-numeric token '" + tok + "'");
      }
      if (used != tok.size())
        fail(errc::parse_error, "line " + std::to_string(line_no) + ": non-numeric token '" + tok + "'");
    }
    Point3 p{v[0], v[1], v[2]};
    detail::check_finite(p, cloud.count());
    cloud.points.push_back(p);
  }
  return cloud;
}

inline void write_xyz(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  char buf[96];
  for (const Point3& p : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x, p.y, p.z);
    out << buf;
  }
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

/// Per-point class labels, one integer per line, line i labels point i.
inline std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      std::size_t used = 0;
      int v = std::stoi(line, &used);
      while (used < line.size() && std::isspace(static_cast<unsigned char>(line[used]))) ++used;
      if (used != line.size()) throw std::invalid_argument("trailing");
      labels.push_back(v);
    } catch (const std::exception&) {
      fail(errc::parse_error, "label file line " + std::to_string(line_no) + ": not an integer");
    }
  }
  return labels;
}

inline void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  for (int v : labels) out << v << "\n";
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

inline std::pair<Point3, Point3> bounding_box(const PointCloud& cloud) {
  if (cloud.count() == 0) fail(errc::empty_cloud, "bounding_box of empty cloud");
  Point3 lo = cloud.points.front();
  Point3 hi = lo;
  for (const Point3& p : cloud.points) {
    lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
  }
  return {lo, hi};
}

}  // namespace topomap
