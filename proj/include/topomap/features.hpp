#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "topomap/common.hpp"
#include "topomap/raster.hpp"

namespace topomap {

/// A square window of map values. label: 1 natural surface, 2 engraving,
/// 0 unlabeled. origin is the window's lower-left pixel in the source map.
struct Block {
  std::size_t size = 0;  // B
  std::size_t origin_x = 0;
  std::size_t origin_y = 0;
  int label = 0;
  std::vector<double> pixels;  // size * size, row-major

  double at(std::size_t x, std::size_t y) const { return pixels[y * size + x]; }
};

enum class Family { ghs, sf, lbp, glcm, hog };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::ghs: return "ghs";
    case Family::sf: return "sf";
    case Family::lbp: return "lbp";
    case Family::glcm: return "glcm";
    case Family::hog: return "hog";
  }
  return "?";
}

inline Family family_from_name(const std::string& s) {
  if (s == "ghs") return Family::ghs;
  if (s == "sf") return Family::sf;
  if (s == "lbp") return Family::lbp;
  if (s == "glcm") return Family::glcm;
  if (s == "hog") return Family::hog;
  fail(errc::bad_config, "unknown feature family '" + s + "'");
}

struct FamilySpan {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Feature rows with labels and the family layout of the columns.
struct LabeledDataset {
  std::size_t n_features = 0;
  std::vector<double> x;  // row-major, n_rows * n_features
  std::vector<int> y;
  std::vector<FamilySpan> layout;

  std::size_t n_rows() const { return y.size(); }
  double at(std::size_t row, std::size_t col) const { return x[row * n_features + col]; }
  const double* row(std::size_t r) const { return x.data() + r * n_features; }
};

/// Cuts stride-aligned BxB blocks out of a map. Blocks overlapping invalid
/// map pixels are skipped. When a label map is given, a block is class 2 if
/// the class-2 fraction among its label-valid pixels reaches theta; blocks
/// with no label-valid pixel at all are skipped.
inline std::vector<Block> blockify(const GridMap& map, const GridMap* labels, std::size_t block_size,
                                   std::size_t stride, double theta) {
  if (block_size > map.width || block_size > map.height)
    fail(errc::block_larger_than_map, "block size " + std::to_string(block_size) + " exceeds map " +
                                          std::to_string(map.width) + "x" + std::to_string(map.height));
  if (block_size < 16) fail(errc::invalid_block_geometry, "block size must be at least 16 pixels");
  if (stride == 0) fail(errc::invalid_block_geometry, "stride must be positive");
  if (!(theta > 0.0) || theta > 1.0) fail(errc::invalid_block_geometry, "theta must be in (0, 1]");
  if (labels && !labels->same_geometry(map))
    fail(errc::geometry_mismatch, "label map geometry differs from the value map");

  std::vector<Block> blocks;
  for (std::size_t y0 = 0; y0 + block_size <= map.height; y0 += stride) {
    for (std::size_t x0 = 0; x0 + block_size <= map.width; x0 += stride) {
      bool ok = true;
      for (std::size_t y = y0; ok && y < y0 + block_size; ++y)
        for (std::size_t x = x0; x < x0 + block_size; ++x)
          if (!map.is_valid(x, y)) { ok = false; break; }
      if (!ok) continue;

      Block b;
      b.size = block_size;
      b.origin_x = x0;
      b.origin_y = y0;
      b.pixels.resize(block_size * block_size);
      for (std::size_t y = 0; y < block_size; ++y)
        for (std::size_t x = 0; x < block_size; ++x)
          b.pixels[y * block_size + x] = map.at(x0 + x, y0 + y);

      if (labels) {
        std::size_t n_labeled = 0, n_class2 = 0;
        for (std::size_t y = y0; y < y0 + block_size; ++y) {
          for (std::size_t x = x0; x < x0 + block_size; ++x) {
            if (!labels->is_valid(x, y)) continue;
            ++n_labeled;
            if (labels->at(x, y) >= 1.5) ++n_class2;
          }
        }
        if (n_labeled == 0) continue;
        b.label = (static_cast<double>(n_class2) >= theta * static_cast<double>(n_labeled)) ? 2 : 1;
      }
      blocks.push_back(std::move(b));
    }
  }
  return blocks;
}

/// Orthonormal DCT-II: C(k) = s(k) * sum_i v(i) cos(pi (2i+1) k / (2n)),
/// s(0) = sqrt(1/n), s(k>0) = sqrt(2/n).
inline std::vector<double> dct1d(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const double inv2n = kPi / (2.0 * static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += v[i] * std::cos(inv2n * static_cast<double>((2 * i + 1) * k));
    double s = (k == 0) ? std::sqrt(1.0 / static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
    out[k] = s * acc;
  }
  return out;
}

/// Global histogram shape: the first n_coef DCT coefficients of the block's
/// normalized value histogram. The histogram range should come from the
/// whole source map so blocks stay comparable.
inline std::vector<double> ghs(const Block& block, std::size_t n_bins, std::pair<double, double> value_range,
                               std::size_t n_coef) {
  const double lo = value_range.first, hi = value_range.second;
  if (!(hi > lo)) fail(errc::degenerate_range, "histogram range must have hi > lo");
  if (n_bins == 0 || n_coef > n_bins) fail(errc::invalid_size, "need 0 < n_coef <= n_bins");
  std::vector<double> hist(n_bins, 0.0);
  const double scale = static_cast<double>(n_bins) / (hi - lo);
  for (double v : block.pixels) {
    auto b = static_cast<long long>(std::floor((v - lo) * scale));
    if (b < 0) b = 0;
    if (b >= static_cast<long long>(n_bins)) b = static_cast<long long>(n_bins) - 1;
    hist[static_cast<std::size_t>(b)] += 1.0;
  }
  const double total = static_cast<double>(block.pixels.size());
  for (double& h : hist) h /= total;
  std::vector<double> coef = dct1d(hist);
  coef.resize(n_coef);
  return coef;
}

/// Spatial frequencies: the top-left 8x8 corner (DC included) of the block's
/// orthonormal 2D DCT, row-major.
inline std::vector<double> sf(const Block& block) {
  const std::size_t n = block.size;
  if (n < 8) fail(errc::block_too_small, "sf needs a block of at least 8x8 pixels");
  // rows
  std::vector<double> tmp(n * n);
  std::vector<double> line(n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) line[x] = block.pixels[y * n + x];
    std::vector<double> c = dct1d(line);
    for (std::size_t x = 0; x < n; ++x) tmp[y * n + x] = c[x];
  }
  // columns
  std::vector<double> full(n * n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) line[y] = tmp[y * n + x];
    std::vector<double> c = dct1d(line);
    for (std::size_t y = 0; y < n; ++y) full[y * n + x] = c[y];
  }
  std::vector<double> out;
  out.reserve(64);
  for (std::size_t ky = 0; ky < 8; ++ky)
    for (std::size_t kx = 0; kx < 8; ++kx) out.push_back(full[ky * n + kx]);
  return out;
}

namespace detail {

// Circular 8-neighborhood in grid steps, starting east, counterclockwise.
inline constexpr std::array<std::array<int, 2>, 8> kLbpOffsets = {
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

inline const std::array<int, 256>& lbp_bin_table() {
  static const std::array<int, 256> table = [] {
    std::array<int, 256> t{};
    int next = 0;
    for (int code = 0; code < 256; ++code) {
      int transitions = 0;
      for (int b = 0; b < 8; ++b) {
        int cur = (code >> b) & 1;
        int nxt = (code >> ((b + 1) % 8)) & 1;
        if (cur != nxt) ++transitions;
      }
      t[static_cast<std::size_t>(code)] = (transitions <= 2) ? next++ : -1;
    }
    for (int code = 0; code < 256; ++code)
      if (t[static_cast<std::size_t>(code)] < 0) t[static_cast<std::size_t>(code)] = 58;
    return t;
  }();
  return table;
}

}  // namespace detail

/// Uniform local binary patterns over the 8 grid neighbors: 58 uniform bins
/// (at most two circular bit transitions) plus one pooled bin, normalized
/// to sum 1.
inline std::vector<double> lbp_histogram(const Block& block) {
  const std::size_t n = block.size;
  if (n < 3) fail(errc::block_too_small, "lbp needs a block of at least 3x3 pixels");
  std::vector<double> hist(59, 0.0);
  const auto& table = detail::lbp_bin_table();
  for (std::size_t y = 1; y + 1 < n; ++y) {
    for (std::size_t x = 1; x + 1 < n; ++x) {
      double center = block.at(x, y);
      int code = 0;
      for (int b = 0; b < 8; ++b) {
        auto nx = static_cast<std::size_t>(static_cast<long long>(x) + detail::kLbpOffsets[static_cast<std::size_t>(b)][0]);
        auto ny = static_cast<std::size_t>(static_cast<long long>(y) + detail::kLbpOffsets[static_cast<std::size_t>(b)][1]);
        if (block.at(nx, ny) >= center) code |= 1 << b;
      }
      hist[static_cast<std::size_t>(table[static_cast<std::size_t>(code)])] += 1.0;
    }
  }
  const double total = static_cast<double>((n - 2) * (n - 2));
  for (double& h : hist) h /= total;
  return hist;
}

namespace detail {

inline constexpr std::array<std::array<int, 2>, 4> kGlcmOffsets = {{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};

inline std::vector<int> quantize_levels(const Block& block, std::size_t n_levels) {
  double lo = block.pixels[0], hi = block.pixels[0];
  for (double v : block.pixels) { lo = std::min(lo, v); hi = std::max(hi, v); }
  std::vector<int> q(block.pixels.size(), 0);
  if (hi > lo) {
    const double scale = static_cast<double>(n_levels) / (hi - lo);
    for (std::size_t i = 0; i < block.pixels.size(); ++i) {
      auto l = static_cast<long long>(std::floor((block.pixels[i] - lo) * scale));
      if (l < 0) l = 0;
      if (l >= static_cast<long long>(n_levels)) l = static_cast<long long>(n_levels) - 1;
      q[i] = static_cast<int>(l);
    }
  }
  return q;
}

// Symmetric normalized co-occurrence matrix for one (dx, dy) offset.
inline std::vector<double> glcm_matrix(const std::vector<int>& levels, std::size_t n, std::size_t n_levels,
                                       int dx, int dy) {
  std::vector<double> m(n_levels * n_levels, 0.0);
  double total = 0.0;
  for (long long y = 0; y < static_cast<long long>(n); ++y) {
    for (long long x = 0; x < static_cast<long long>(n); ++x) {
      long long x2 = x + dx, y2 = y + dy;
      if (x2 < 0 || y2 < 0 || x2 >= static_cast<long long>(n) || y2 >= static_cast<long long>(n)) continue;
      int a = levels[static_cast<std::size_t>(y * static_cast<long long>(n) + x)];
      int b = levels[static_cast<std::size_t>(y2 * static_cast<long long>(n) + x2)];
      m[static_cast<std::size_t>(a) * n_levels + static_cast<std::size_t>(b)] += 1.0;
      m[static_cast<std::size_t>(b) * n_levels + static_cast<std::size_t>(a)] += 1.0;
      total += 2.0;
    }
  }
  if (total > 0.0)
    for (double& v : m) v /= total;
  return m;
}

struct GlcmStats {
  double contrast = 0.0;
  double correlation = 0.0;
  double energy = 0.0;
  double homogeneity = 0.0;
};

inline GlcmStats glcm_stats(const std::vector<double>& m, std::size_t n_levels) {
  GlcmStats s;
  std::vector<double> pi(n_levels, 0.0), pj(n_levels, 0.0);
  for (std::size_t i = 0; i < n_levels; ++i) {
    for (std::size_t j = 0; j < n_levels; ++j) {
      double p = m[i * n_levels + j];
      double d = static_cast<double>(i) - static_cast<double>(j);
      s.contrast += d * d * p;
      s.energy += p * p;
      s.homogeneity += p / (1.0 + d * d);
      pi[i] += p;
      pj[j] += p;
    }
  }
  double mi = 0, mj = 0;
  for (std::size_t i = 0; i < n_levels; ++i) {
    mi += static_cast<double>(i) * pi[i];
    mj += static_cast<double>(i) * pj[i];
  }
  double vi = 0, vj = 0;
  for (std::size_t i = 0; i < n_levels; ++i) {
    vi += (static_cast<double>(i) - mi) * (static_cast<double>(i) - mi) * pi[i];
    vj += (static_cast<double>(i) - mj) * (static_cast<double>(i) - mj) * pj[i];
  }
  if (vi > 0.0 && vj > 0.0) {
    double cov = 0.0;
    for (std::size_t i = 0; i < n_levels; ++i)
      for (std::size_t j = 0; j < n_levels; ++j)
        cov += (static_cast<double>(i) - mi) * (static_cast<double>(j) - mj) * m[i * n_levels + j];
    s.correlation = cov / std::sqrt(vi * vj);
  }
  return s;
}

}  // namespace detail

/// Haralick statistics (contrast, correlation, energy, homogeneity) of the
/// symmetric co-occurrence matrices for offsets (1,0), (0,1), (1,1), (1,-1),
/// 16 values. Correlation is 0 by convention when a marginal variance
/// vanishes.
inline std::vector<double> glcm_features(const Block& block, std::size_t n_levels = 16) {
  if (n_levels < 2) fail(errc::invalid_size, "glcm needs at least 2 gray levels");
  std::vector<int> levels = detail::quantize_levels(block, n_levels);
  std::vector<double> out;
  out.reserve(16);
  for (const auto& off : detail::kGlcmOffsets) {
    std::vector<double> m = detail::glcm_matrix(levels, block.size, n_levels, off[0], off[1]);
    detail::GlcmStats s = detail::glcm_stats(m, n_levels);
    out.push_back(s.contrast);
    out.push_back(s.correlation);
    out.push_back(s.energy);
    out.push_back(s.homogeneity);
  }
  return out;
}

struct HogParams {
  std::size_t cell = 8;         // pixels per cell side
  std::size_t block_cells = 2;  // cells per descriptor block side
  std::size_t bins = 9;         // unsigned orientation bins over [0, pi)
  double clip = 0.2;            // L2 clipping level
};

inline std::size_t hog_length(std::size_t block_size, const HogParams& p = {}) {
  if (p.cell == 0 || block_size % p.cell != 0)
    fail(errc::geometry_mismatch, "block size must be divisible by the cell size");
  std::size_t ncells = block_size / p.cell;
  if (ncells < p.block_cells) fail(errc::geometry_mismatch, "block too small for the descriptor geometry");
  std::size_t positions = ncells - p.block_cells + 1;
  return positions * positions * p.block_cells * p.block_cells * p.bins;
}

/// Histogram-of-oriented-gradients descriptor over the real-valued block:
/// central-difference gradients (one-sided at borders), unsigned
/// orientations soft-binned between the two nearest bin centers, cell
/// histograms grouped into 2x2-cell descriptor blocks at 1-cell stride,
/// each L2-normalized, clipped, renormalized. All-zero descriptor blocks
/// stay zero.
inline std::vector<double> hog_features(const Block& block, const HogParams& p = {}) {
  const std::size_t n = block.size;
  const std::size_t out_len = hog_length(n, p);
  const std::size_t ncells = n / p.cell;
  std::vector<double> cells(ncells * ncells * p.bins, 0.0);

  const double bin_width = kPi / static_cast<double>(p.bins);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      double gx, gy;
      if (x == 0) gx = block.at(1, y) - block.at(0, y);
      else if (x == n - 1) gx = block.at(n - 1, y) - block.at(n - 2, y);
      else gx = 0.5 * (block.at(x + 1, y) - block.at(x - 1, y));
      if (y == 0) gy = block.at(x, 1) - block.at(x, 0);
      else if (y == n - 1) gy = block.at(x, n - 1) - block.at(x, n - 2);
      else gy = 0.5 * (block.at(x, y + 1) - block.at(x, y - 1));
      double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0.0) theta += kPi;
      if (theta >= kPi) theta -= kPi;
      double t = theta / bin_width - 0.5;
      double fl = std::floor(t);
      double frac = t - fl;
      long long b0 = static_cast<long long>(fl);
      std::size_t bin0 = static_cast<std::size_t>(((b0 % static_cast<long long>(p.bins)) + static_cast<long long>(p.bins)) % static_cast<long long>(p.bins));
      std::size_t bin1 = (bin0 + 1) % p.bins;
      std::size_t cx = x / p.cell, cy = y / p.cell;
      double* hist = cells.data() + (cy * ncells + cx) * p.bins;
      hist[bin0] += mag * (1.0 - frac);
      hist[bin1] += mag * frac;
    }
  }

  std::vector<double> out;
  out.reserve(out_len);
  const std::size_t positions = ncells - p.block_cells + 1;
  std::vector<double> v(p.block_cells * p.block_cells * p.bins);
  for (std::size_t by = 0; by < positions; ++by) {
    for (std::size_t bx = 0; bx < positions; ++bx) {
      std::size_t k = 0;
      for (std::size_t cy = by; cy < by + p.block_cells; ++cy)
        for (std::size_t cx = bx; cx < bx + p.block_cells; ++cx)
          for (std::size_t b = 0; b < p.bins; ++b) v[k++] = cells[(cy * ncells + cx) * p.bins + b];
      double norm2 = 0.0;
      for (double e : v) norm2 += e * e;
      if (norm2 > 0.0) {
        double inv = 1.0 / std::sqrt(norm2);
        for (double& e : v) e = std::min(e * inv, p.clip);
        norm2 = 0.0;
        for (double e : v) norm2 += e * e;
        if (norm2 > 0.0) {
          inv = 1.0 / std::sqrt(norm2);
          for (double& e : v) e *= inv;
        }
      }
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  return out;
}

/// Knobs for the per-family extractors; value_range feeds the GHS histogram
/// and should be the global min/max of the source map.
struct FeatureParams {
  std::size_t ghs_bins = 64;
  std::size_t ghs_coef = 30;
  std::pair<double, double> value_range{0.0, 1.0};
  std::size_t glcm_levels = 16;
  HogParams hog;
};

inline std::vector<double> extract_family(const Block& block, Family family, const FeatureParams& p) {
  switch (family) {
    case Family::ghs: return ghs(block, p.ghs_bins, p.value_range, p.ghs_coef);
    case Family::sf: return sf(block);
    case Family::lbp: return lbp_histogram(block);
    case Family::glcm: return glcm_features(block, p.glcm_levels);
    case Family::hog: return hog_features(block, p.hog);
  }
  fail(errc::bad_config, "unreachable family");
}

/// Concatenates the requested families per block, in declared order, and
/// records the column layout.
inline LabeledDataset assemble_dataset(const std::vector<Block>& blocks, const std::vector<Family>& families,
                                       const FeatureParams& params) {
  if (families.empty()) fail(errc::bad_config, "no feature families requested");
  if (blocks.empty()) fail(errc::empty_dataset, "no blocks to featurize");

  LabeledDataset ds;
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    std::size_t col = 0;
    for (std::size_t f = 0; f < families.size(); ++f) {
      std::vector<double> vals = extract_family(blocks[r], families[f], params);
      if (r == 0) {
        ds.layout.push_back({family_name(families[f]), col, vals.size()});
      } else if (vals.size() != ds.layout[f].length) {
        fail(errc::inconsistent_lengths, "feature family " + std::string(family_name(families[f])) +
                                             " produced rows of differing length");
      }
      col += vals.size();
      ds.x.insert(ds.x.end(), vals.begin(), vals.end());
    }
    if (r == 0) ds.n_features = col;
    ds.y.push_back(blocks[r].label);
  }
  return ds;
}

// --- CSV interchange --------------------------------------------------------

inline void write_csv(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  for (const FamilySpan& span : ds.layout)
    for (std::size_t i = 0; i < span.length; ++i) out << span.name << "_" << i << ",";
  out << "label\n";
  char buf[40];
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    for (std::size_t c = 0; c < ds.n_features; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.at(r, c));
      out << buf << ",";
    }
    out << ds.y[r] << "\n";
  }
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

inline LabeledDataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(errc::parse_error, "'" + path + "': empty csv");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> names;
  std::stringstream hs(line);
  std::string tok;
  while (std::getline(hs, tok, ',')) names.push_back(tok);
  if (names.empty() || names.back() != "label")
    fail(errc::parse_error, "'" + path + "': last column must be 'label'");
  names.pop_back();

  LabeledDataset ds;
  ds.n_features = names.size();
  for (const std::string& n : names) {
    std::size_t us = n.rfind('_');
    std::string fam = (us == std::string::npos) ? n : n.substr(0, us);
    if (!ds.layout.empty() && ds.layout.back().name == fam) ds.layout.back().length += 1;
    else ds.layout.push_back({fam, ds.layout.empty() ? 0 : ds.layout.back().offset + ds.layout.back().length, 1});
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<double> row;
    row.reserve(ds.n_features + 1);
    while (std::getline(ls, tok, ',')) {
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        fail(errc::parse_error, "'" + path + "' line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
    }
    if (row.size() != ds.n_features + 1)
      fail(errc::parse_error, "'" + path + "' line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(ds.n_features + 1) + " columns, got " + std::to_string(row.size()));
    ds.x.insert(ds.x.end(), row.begin(), row.end() - 1);
    ds.y.push_back(static_cast<int>(std::llround(row.back())));
  }
  if (ds.y.empty()) fail(errc::empty_dataset, "'" + path + "' has no data rows");
  return ds;
}

}  // namespace topomap
