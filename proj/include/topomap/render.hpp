#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "topomap/png_io.hpp"
#include "topomap/raster.hpp"

namespace topomap {

namespace detail {

inline void write_sidecar(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

inline nlohmann::json map_sidecar_base(const GridMap& map, const char* style) {
  return {{"style", style},
          {"width", map.width},
          {"height", map.height},
          {"pixel_size", map.pixel_size},
          {"origin_u", map.origin_u},
          {"origin_v", map.origin_v},
          // png row 0 shows the map's maximum-v row (image y points down)
          {"row0", "max_v"},
          {"invalid", "black"}};
}

}  // namespace detail

/// Min-max normalized 16-bit grayscale PNG; a constant map renders as
/// uniform mid-gray (32768). Normalization is recorded in the JSON sidecar
/// so values can be recovered from the image. Invalid pixels render black.
inline void render_gray(const GridMap& map, const std::string& png_path, const std::string& sidecar_path) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t c = 0; c < map.cells(); ++c) {
    if (!map.valid[c]) continue;
    if (!any) { lo = hi = map.values[c]; any = true; }
    lo = std::min(lo, map.values[c]);
    hi = std::max(hi, map.values[c]);
  }
  if (!any) fail(errc::all_invalid, "map has no valid cells to render");

  std::vector<std::uint16_t> px(map.cells(), 0);
  const bool flat = !(hi > lo);
  const double scale = flat ? 0.0 : 65535.0 / (hi - lo);
  for (std::size_t y = 0; y < map.height; ++y) {
    std::size_t src_y = map.height - 1 - y;
    for (std::size_t x = 0; x < map.width; ++x) {
      if (!map.is_valid(x, src_y)) continue;
      double v = map.at(x, src_y);
      px[y * map.width + x] =
          flat ? 32768 : static_cast<std::uint16_t>(std::llround((v - lo) * scale));
    }
  }
  write_png_gray16(png_path, map.width, map.height, px);

  nlohmann::json j = detail::map_sidecar_base(map, "gray");
  j["lo"] = lo;
  j["hi"] = hi;
  detail::write_sidecar(sidecar_path, j);
}

/// Diverging colormap for signed maps: red = positive (valleys),
/// blue = negative (peaks), white = exactly zero. Symmetric scaling by the
/// largest absolute value, recorded in the sidecar.
inline void render_signed(const GridMap& map, const std::string& png_path, const std::string& sidecar_path) {
  double scale = 0.0;
  bool any = false;
  for (std::size_t c = 0; c < map.cells(); ++c) {
    if (!map.valid[c]) continue;
    any = true;
    scale = std::max(scale, std::abs(map.values[c]));
  }
  if (!any) fail(errc::all_invalid, "map has no valid cells to render");

  std::vector<std::array<std::uint8_t, 3>> px(map.cells(), {0, 0, 0});
  for (std::size_t y = 0; y < map.height; ++y) {
    std::size_t src_y = map.height - 1 - y;
    for (std::size_t x = 0; x < map.width; ++x) {
      if (!map.is_valid(x, src_y)) continue;
      double t = scale > 0.0 ? std::clamp(map.at(x, src_y) / scale, -1.0, 1.0) : 0.0;
      auto ch = [](double f) { return static_cast<std::uint8_t>(std::llround(255.0 * f)); };
      std::array<std::uint8_t, 3> rgb;
      if (t >= 0.0) rgb = {255, ch(1.0 - t), ch(1.0 - t)};
      else rgb = {ch(1.0 + t), ch(1.0 + t), 255};
      px[y * map.width + x] = rgb;
    }
  }
  write_png_rgb8(png_path, map.width, map.height, px);

  nlohmann::json j = detail::map_sidecar_base(map, "signed");
  j["scale"] = scale;
  detail::write_sidecar(sidecar_path, j);
}

/// Luminance import: 16-bit grayscale PNG to a [0,1]-valued fully valid map
/// (png row 0 becomes the maximum-v row, mirroring render_gray).
inline GridMap gray16_to_map(const ImageGray16& img, double pixel_size) {
  if (!(pixel_size > 0.0)) fail(errc::bad_config, "pixel_size must be positive");
  GridMap map;
  map.width = img.width;
  map.height = img.height;
  map.pixel_size = pixel_size;
  map.origin_u = 0.5 * pixel_size;
  map.origin_v = 0.5 * pixel_size;
  map.values.assign(map.cells(), 0.0);
  map.valid.assign(map.cells(), 1);
  for (std::size_t y = 0; y < map.height; ++y) {
    std::size_t src_y = map.height - 1 - y;
    for (std::size_t x = 0; x < map.width; ++x)
      map.values[y * map.width + x] = static_cast<double>(img.pixels[src_y * img.width + x]) / 65535.0;
  }
  return map;
}

}  // namespace topomap
