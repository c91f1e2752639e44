#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "topomap/common.hpp"
#include "topomap/raster.hpp"

namespace topomap {

/// Separable 2D Gaussian smoothing kernel with odd support W. The 2D tap at
/// (i, j) is taps[i] * taps[j]; the 1D taps are normalized to sum 1, so the
/// 2D kernel sums to 1 and is symmetric under reflection and 90-degree
/// rotation by construction.
struct GaussianKernel {
  double sigma = 0.0;        // pixels
  std::size_t support = 0;   // W, odd
  std::vector<double> taps;  // length W, sums to 1

  double coefficient(std::size_t i, std::size_t j) const { return taps[i] * taps[j]; }
};

/// Builds the smoothing kernel for a structure size in mm. W is the structure
/// size in pixels rounded to the nearest integer and forced odd by adding 1;
/// sigma = W/6 puts the truncation at three standard deviations.
inline GaussianKernel make_gaussian_kernel(double structure_size_mm, double pixel_size) {
  if (!(structure_size_mm > 0.0) || !(pixel_size > 0.0))
    fail(errc::invalid_size, "structure size and pixel size must be positive");
  auto w = static_cast<long long>(std::llround(structure_size_mm / pixel_size));
  if (w < 1) w = 1;
  if (w % 2 == 0) w += 1;
  GaussianKernel k;
  k.support = static_cast<std::size_t>(w);
  k.sigma = static_cast<double>(w) / 6.0;
  k.taps.resize(k.support);
  const double c = static_cast<double>(w / 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.support; ++i) {
    double x = static_cast<double>(i) - c;
    k.taps[i] = std::exp(-(x * x) / (2.0 * k.sigma * k.sigma));
    sum += k.taps[i];
  }
  for (double& t : k.taps) t /= sum;
  return k;
}

namespace detail {

// One separable pass along a row or column with replicate borders and a
// fixed tap order, so results are reproducible bit for bit.
inline void convolve_line(const double* src, double* dst, std::size_t n, std::ptrdiff_t stride,
                          const std::vector<double>& taps) {
  const long long half = static_cast<long long>(taps.size() / 2);
  const long long len = static_cast<long long>(n);
  for (long long i = 0; i < len; ++i) {
    double acc = 0.0;
    for (long long t = -half; t <= half; ++t) {
      long long j = i - t;
      if (j < 0) j = 0;
      if (j >= len) j = len - 1;
      acc += taps[static_cast<std::size_t>(t + half)] * src[j * stride];
    }
    dst[i * stride] = acc;
  }
}

}  // namespace detail

/// Gaussian smoothing of a fully valid map, replicate borders, implemented
/// as two 1D passes.
inline GridMap convolve(const GridMap& map, const GaussianKernel& kernel) {
  if (kernel.support > map.width || kernel.support > map.height)
    fail(errc::kernel_larger_than_map,
         "kernel support " + std::to_string(kernel.support) + " exceeds map " +
             std::to_string(map.width) + "x" + std::to_string(map.height));
  if (!map.fully_valid())
    fail(errc::invalid_cells, "convolve requires a fully valid map; run fill_holes first");

  GridMap tmp = map;
  // horizontal pass
  for (std::size_t y = 0; y < map.height; ++y)
    detail::convolve_line(map.values.data() + y * map.width, tmp.values.data() + y * map.width,
                          map.width, 1, kernel.taps);
  GridMap out = map;
  // vertical pass
  for (std::size_t x = 0; x < map.width; ++x)
    detail::convolve_line(tmp.values.data() + x, out.values.data() + x, map.height,
                          static_cast<std::ptrdiff_t>(map.width), kernel.taps);
  return out;
}

/// The topography map: the depth map minus its Gaussian-smoothed version.
/// Positive values are below the smoothed surface (valleys), negative above
/// (peaks), given a depth map that grows away from the viewer.
inline GridMap extract_topography(const GridMap& depth, const GaussianKernel& kernel) {
  GridMap smoothed = convolve(depth, kernel);
  GridMap out = depth;
  for (std::size_t i = 0; i < out.cells(); ++i) out.values[i] = depth.values[i] - smoothed.values[i];
  return out;
}

/// Splits a topography map into its valley part max(T,0) and peak part
/// |min(T,0)|. Both halves are non-negative and reconstruct T by
/// valleys - peaks.
inline std::pair<GridMap, GridMap> split_peaks_valleys(const GridMap& t) {
  GridMap valleys = t;
  GridMap peaks = t;
  for (std::size_t i = 0; i < t.cells(); ++i) {
    double v = t.values[i];
    valleys.values[i] = v > 0.0 ? v : 0.0;
    peaks.values[i] = v < 0.0 ? -v : 0.0;
  }
  return {std::move(valleys), std::move(peaks)};
}

/// Smooths a non-negative half map and takes the natural logarithm with a
/// positive floor epsilon, which both defines log at zero and compresses
/// outlier spikes.
inline GridMap enhance(const GridMap& half_map, const GaussianKernel& kernel, double epsilon) {
  if (!(epsilon > 0.0)) fail(errc::negative_input, "epsilon must be positive");
  for (std::size_t i = 0; i < half_map.cells(); ++i)
    if (half_map.values[i] < 0.0)
      fail(errc::negative_input, "enhance input must be non-negative");
  GridMap out = convolve(half_map, kernel);
  for (std::size_t i = 0; i < out.cells(); ++i) out.values[i] = std::log(out.values[i] + epsilon);
  return out;
}

/// Per-pixel gradient magnitude of the depth map in mm/mm: central
/// differences in the interior, one-sided at the borders.
inline GridMap depth_gradient_map(const GridMap& depth) {
  if (depth.width < 3 || depth.height < 3)
    fail(errc::map_too_small, "gradient map needs at least a 3x3 grid");
  if (!depth.fully_valid())
    fail(errc::invalid_cells, "depth_gradient_map requires a fully valid map");
  GridMap out = depth;
  const std::size_t w = depth.width, h = depth.height;
  const double ps = depth.pixel_size;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double gx, gy;
      if (x == 0) gx = (depth.at(1, y) - depth.at(0, y)) / ps;
      else if (x == w - 1) gx = (depth.at(w - 1, y) - depth.at(w - 2, y)) / ps;
      else gx = (depth.at(x + 1, y) - depth.at(x - 1, y)) / (2.0 * ps);
      if (y == 0) gy = (depth.at(x, 1) - depth.at(x, 0)) / ps;
      else if (y == h - 1) gy = (depth.at(x, h - 1) - depth.at(x, h - 2)) / ps;
      else gy = (depth.at(x, y + 1) - depth.at(x, y - 1)) / (2.0 * ps);
      out.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

}  // namespace topomap
