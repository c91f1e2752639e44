#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "topomap/common.hpp"
#include "topomap/planefit.hpp"

namespace topomap {

/// Regular 2D grid of signed values with a validity mask. Row 0 is the
/// minimum-v row; origin_u/origin_v are the world coordinates of the center
/// of pixel (0, 0). Invalid cells hold value 0 by convention.
struct GridMap {
  std::size_t width = 0;
  std::size_t height = 0;
  double pixel_size = 0.0;  // mm per pixel
  double origin_u = 0.0;    // mm
  double origin_v = 0.0;    // mm
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  double& at(std::size_t x, std::size_t y) { return values[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
  bool is_valid(std::size_t x, std::size_t y) const { return valid[y * width + x] != 0; }
  std::size_t cells() const { return width * height; }

  bool fully_valid() const {
    for (std::uint8_t v : valid)
      if (!v) return false;
    return true;
  }

  bool same_geometry(const GridMap& o) const {
    return width == o.width && height == o.height && pixel_size == o.pixel_size &&
           origin_u == o.origin_u && origin_v == o.origin_v;
  }
};

inline constexpr std::size_t kDefaultGridCellCap = 100000000;  // 1e8

namespace detail {

struct GridGeometry {
  std::size_t width = 0;
  std::size_t height = 0;
  double left = 0.0;    // u coordinate of the left edge of column 0
  double bottom = 0.0;  // v coordinate of the bottom edge of row 0
  double pixel_size = 0.0;

  std::size_t col(double u) const {
    auto c = static_cast<long long>(std::floor((u - left) / pixel_size));
    if (c < 0) c = 0;
    if (c >= static_cast<long long>(width)) c = static_cast<long long>(width) - 1;
    return static_cast<std::size_t>(c);
  }
  std::size_t row(double v) const {
    auto r = static_cast<long long>(std::floor((v - bottom) / pixel_size));
    if (r < 0) r = 0;
    if (r >= static_cast<long long>(height)) r = static_cast<long long>(height) - 1;
    return static_cast<std::size_t>(r);
  }
};

// Grid spanning the (u, v) bounding box of the projection, inflated by one
// pixel on every side. The same geometry is reused for label rasterization
// so value maps and label maps align cell for cell.
inline GridGeometry grid_geometry(const ProjectedPoints& proj, double pixel_size, std::size_t cell_cap) {
  if (proj.count() == 0) fail(errc::empty_projection, "no points to rasterize");
  if (!(pixel_size > 0.0)) fail(errc::invalid_size, "pixel_size must be positive");
  double umin = proj.u[0], umax = proj.u[0], vmin = proj.v[0], vmax = proj.v[0];
  for (std::size_t i = 1; i < proj.count(); ++i) {
    umin = std::min(umin, proj.u[i]); umax = std::max(umax, proj.u[i]);
    vmin = std::min(vmin, proj.v[i]); vmax = std::max(vmax, proj.v[i]);
  }
  GridGeometry g;
  g.pixel_size = pixel_size;
  double cols_data = std::floor((umax - umin) / pixel_size) + 1.0;
  double rows_data = std::floor((vmax - vmin) / pixel_size) + 1.0;
  if (cols_data + 2.0 > 1e12 || rows_data + 2.0 > 1e12 ||
      (cols_data + 2.0) * (rows_data + 2.0) > static_cast<double>(cell_cap))
    fail(errc::grid_too_large, "grid would exceed the cell cap of " + std::to_string(cell_cap));
  g.width = static_cast<std::size_t>(cols_data) + 2;
  g.height = static_cast<std::size_t>(rows_data) + 2;
  g.left = umin - pixel_size;
  g.bottom = vmin - pixel_size;
  return g;
}

inline GridMap empty_map(const GridGeometry& g) {
  GridMap m;
  m.width = g.width;
  m.height = g.height;
  m.pixel_size = g.pixel_size;
  m.origin_u = g.left + 0.5 * g.pixel_size;
  m.origin_v = g.bottom + 0.5 * g.pixel_size;
  m.values.assign(m.cells(), 0.0);
  m.valid.assign(m.cells(), 0);
  return m;
}

}  // namespace detail

/// Bins projected points into cells; each valid cell holds the arithmetic
/// mean of the signed distances of the points that fell into it.
inline GridMap rasterize(const ProjectedPoints& proj, double pixel_size,
                         std::size_t cell_cap = kDefaultGridCellCap) {
  detail::GridGeometry g = detail::grid_geometry(proj, pixel_size, cell_cap);
  GridMap map = detail::empty_map(g);
  std::vector<std::uint32_t> counts(map.cells(), 0);
  for (std::size_t i = 0; i < proj.count(); ++i) {
    std::size_t idx = g.row(proj.v[i]) * map.width + g.col(proj.u[i]);
    map.values[idx] += proj.d[i];
    counts[idx] += 1;
  }
  for (std::size_t i = 0; i < map.cells(); ++i) {
    if (counts[i] > 0) {
      map.values[i] /= static_cast<double>(counts[i]);
      map.valid[i] = 1;
    }
  }
  return map;
}

/// Iteratively fills invalid cells that have at least 3 valid 8-neighbors
/// with the mean of those neighbors. Rounds are Jacobi style: a round reads
/// only the previous round's cells. Returns the filled map and the number
/// of cells that are still invalid.
inline std::pair<GridMap, std::size_t> fill_holes(const GridMap& map, std::size_t max_rounds = 64) {
  bool any_valid = false;
  for (std::uint8_t v : map.valid)
    if (v) { any_valid = true; break; }
  if (!any_valid) fail(errc::all_invalid, "fill_holes on a map with no valid cells");

  GridMap cur = map;
  const long long w = static_cast<long long>(map.width);
  const long long h = static_cast<long long>(map.height);
  for (std::size_t round = 0; round < max_rounds; ++round) {
    GridMap next = cur;
    bool changed = false;
    for (long long y = 0; y < h; ++y) {
      for (long long x = 0; x < w; ++x) {
        if (cur.valid[static_cast<std::size_t>(y * w + x)]) continue;
        double sum = 0.0;
        int n = 0;
        for (long long dy = -1; dy <= 1; ++dy) {
          for (long long dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            long long nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            std::size_t ni = static_cast<std::size_t>(ny * w + nx);
            if (cur.valid[ni]) { sum += cur.values[ni]; ++n; }
          }
        }
        if (n >= 3) {
          std::size_t i = static_cast<std::size_t>(y * w + x);
          next.values[i] = sum / n;
          next.valid[i] = 1;
          changed = true;
        }
      }
    }
    cur = std::move(next);
    if (!changed) break;
  }
  std::size_t still_invalid = 0;
  for (std::uint8_t v : cur.valid)
    if (!v) ++still_invalid;
  return {std::move(cur), still_invalid};
}

// --- GM1 file format -------------------------------------------------------
// 24-byte header: magic "GM1\0", u32 width, u32 height, f32 pixel_size,
// f32 origin_u, f32 origin_v; then width*height little-endian f32 values
// (row-major, row 0 = minimum v), then width*height validity bytes (1/0).

inline void write_gm1(const std::string& path, const GridMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  unsigned char header[24] = {'G', 'M', '1', '\0'};
  detail::store_le<std::uint32_t>(header + 4, static_cast<std::uint32_t>(map.width));
  detail::store_le<std::uint32_t>(header + 8, static_cast<std::uint32_t>(map.height));
  detail::store_le<float>(header + 12, static_cast<float>(map.pixel_size));
  detail::store_le<float>(header + 16, static_cast<float>(map.origin_u));
  detail::store_le<float>(header + 20, static_cast<float>(map.origin_v));
  out.write(reinterpret_cast<const char*>(header), 24);
  std::vector<unsigned char> buf(map.cells() * 4);
  for (std::size_t i = 0; i < map.cells(); ++i)
    detail::store_le<float>(buf.data() + 4 * i, static_cast<float>(map.values[i]));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  out.write(reinterpret_cast<const char*>(map.valid.data()), static_cast<std::streamsize>(map.valid.size()));
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

inline GridMap read_gm1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  unsigned char header[24];
  in.read(reinterpret_cast<char*>(header), 24);
  if (in.gcount() != 24 || header[0] != 'G' || header[1] != 'M' || header[2] != '1' || header[3] != '\0')
    fail(errc::malformed_header, "'" + path + "' is not a GM1 file");
  GridMap map;
  map.width = detail::load_le<std::uint32_t>(header + 4);
  map.height = detail::load_le<std::uint32_t>(header + 8);
  map.pixel_size = static_cast<double>(detail::load_le<float>(header + 12));
  map.origin_u = static_cast<double>(detail::load_le<float>(header + 16));
  map.origin_v = static_cast<double>(detail::load_le<float>(header + 20));
  if (map.width == 0 || map.height == 0 || !(map.pixel_size > 0.0f))
    fail(errc::malformed_header, "'" + path + "' has a degenerate GM1 header");
  const std::size_t n = map.cells();
  std::vector<unsigned char> buf(n * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size())
    fail(errc::truncated_body, "'" + path + "' value payload is short");
  map.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    map.values[i] = static_cast<double>(detail::load_le<float>(buf.data() + 4 * i));
  map.valid.resize(n);
  in.read(reinterpret_cast<char*>(map.valid.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    fail(errc::truncated_body, "'" + path + "' validity payload is short");
  return map;
}

}  // namespace topomap
