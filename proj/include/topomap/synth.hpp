#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "topomap/common.hpp"
#include "topomap/planefit.hpp"
#include "topomap/pointcloud.hpp"
#include "topomap/raster.hpp"
#include "topomap/rng.hpp"

namespace topomap {

/// Knobs for the synthetic engraved-surface generator. Units are mm.
struct SynthParams {
  double extent_w = 20.0;
  double extent_h = 20.0;
  double sample_spacing = 0.05;
  double curvature_amp = 5.0;           // base undulation amplitude
  double groove_depth = 0.5;
  double groove_width = 4.0;
  double roughness_sigma = 0.02;
  double outlier_fraction = 0.001;
  double outlier_amp = 2.0;
  double target_minority_fraction = 0.166;  // groove-covered area fraction
  std::uint64_t seed = 0;
};

struct LabeledCloud {
  PointCloud cloud;
  std::vector<int> labels;  // 1 natural surface, 2 engraving
};

inline void validate(const SynthParams& p) {
  if (!(p.extent_w > 0.0) || !(p.extent_h > 0.0)) fail(errc::bad_config, "extent must be positive");
  if (!(p.sample_spacing > 0.0)) fail(errc::bad_config, "sample_spacing must be positive");
  if (p.curvature_amp < 0.0 || p.groove_depth < 0.0 || p.roughness_sigma < 0.0 || p.outlier_amp < 0.0)
    fail(errc::bad_config, "amplitudes must be non-negative");
  if (!(p.groove_width > 0.0)) fail(errc::bad_config, "groove_width must be positive");
  if (p.outlier_fraction < 0.0 || p.outlier_fraction >= 1.0)
    fail(errc::bad_config, "outlier_fraction must be in [0, 1)");
  if (p.target_minority_fraction < 0.0 || p.target_minority_fraction >= 1.0)
    fail(errc::bad_config, "target_minority_fraction must be in [0, 1)");
}

namespace detail {

// Polyline groove stroke; the stamp has a half-cosine cross-section:
// depth * cos(pi*d/width) for distance d < width/2 from the polyline.
struct Stroke {
  std::vector<double> xs, ys;  // vertices
};

inline double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  double dx = bx - ax, dy = by - ay;
  double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
  double cx = ax + t * dx - px, cy = ay + t * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

// Uniform spatial hash so stroke stamping only touches nearby samples.
struct PointBuckets {
  double cell = 1.0;
  double min_x = 0.0, min_y = 0.0;
  std::size_t nx = 1, ny = 1;
  std::vector<std::vector<std::uint32_t>> bins;

  PointBuckets(const std::vector<double>& xs, const std::vector<double>& ys, double cell_size)
      : cell(cell_size) {
    min_x = *std::min_element(xs.begin(), xs.end());
    min_y = *std::min_element(ys.begin(), ys.end());
    double max_x = *std::max_element(xs.begin(), xs.end());
    double max_y = *std::max_element(ys.begin(), ys.end());
    nx = static_cast<std::size_t>((max_x - min_x) / cell) + 1;
    ny = static_cast<std::size_t>((max_y - min_y) / cell) + 1;
    bins.resize(nx * ny);
    for (std::size_t i = 0; i < xs.size(); ++i)
      bins[index_of(xs[i], ys[i])].push_back(static_cast<std::uint32_t>(i));
  }

  std::size_t index_of(double x, double y) const {
    auto cx = static_cast<std::size_t>(std::clamp((x - min_x) / cell, 0.0, static_cast<double>(nx - 1)));
    auto cy = static_cast<std::size_t>(std::clamp((y - min_y) / cell, 0.0, static_cast<double>(ny - 1)));
    return cy * nx + cx;
  }

  template <typename F>
  void for_each_in_box(double x0, double y0, double x1, double y1, F&& f) const {
    auto c = [&](double v, double lo, std::size_t n) {
      return static_cast<std::size_t>(std::clamp((v - lo) / cell, 0.0, static_cast<double>(n - 1)));
    };
    std::size_t cx0 = c(x0, min_x, nx), cx1 = c(x1, min_x, nx);
    std::size_t cy0 = c(y0, min_y, ny), cy1 = c(y1, min_y, ny);
    for (std::size_t cy = cy0; cy <= cy1; ++cy)
      for (std::size_t cx = cx0; cx <= cx1; ++cx)
        for (std::uint32_t i : bins[cy * nx + cx]) f(i);
  }
};

// Samples within width/2 of the stroke, each with its closest distance.
inline void stroke_hits(const Stroke& s, const PointBuckets& buckets, const std::vector<double>& xs,
                        const std::vector<double>& ys, double width, std::vector<std::uint32_t>& idx,
                        std::vector<double>& dist, std::vector<std::uint32_t>& mark, std::uint32_t tag,
                        std::vector<double>& best) {
  idx.clear();
  dist.clear();
  const double r = 0.5 * width;
  for (std::size_t v = 0; v + 1 < s.xs.size() || (s.xs.size() == 1 && v == 0); ++v) {
    double ax = s.xs[v], ay = s.ys[v];
    double bx = (v + 1 < s.xs.size()) ? s.xs[v + 1] : ax;
    double by = (v + 1 < s.xs.size()) ? s.ys[v + 1] : ay;
    double x0 = std::min(ax, bx) - r, x1 = std::max(ax, bx) + r;
    double y0 = std::min(ay, by) - r, y1 = std::max(ay, by) + r;
    buckets.for_each_in_box(x0, y0, x1, y1, [&](std::uint32_t i) {
      double d = segment_distance(xs[i], ys[i], ax, ay, bx, by);
      if (d >= r) return;
      if (mark[i] != tag) {
        mark[i] = tag;
        best[i] = d;
        idx.push_back(i);
      } else if (d < best[i]) {
        best[i] = d;
      }
    });
    if (s.xs.size() == 1) break;
  }
  dist.reserve(idx.size());
  for (std::uint32_t i : idx) dist.push_back(best[i]);
}

inline Stroke truncate_stroke(const Stroke& s, double frac) {
  double total = 0.0;
  for (std::size_t v = 0; v + 1 < s.xs.size(); ++v)
    total += std::hypot(s.xs[v + 1] - s.xs[v], s.ys[v + 1] - s.ys[v]);
  double want = total * frac;
  Stroke out;
  out.xs.push_back(s.xs[0]);
  out.ys.push_back(s.ys[0]);
  double acc = 0.0;
  for (std::size_t v = 0; v + 1 < s.xs.size() && acc < want; ++v) {
    double seg = std::hypot(s.xs[v + 1] - s.xs[v], s.ys[v + 1] - s.ys[v]);
    if (acc + seg <= want || seg == 0.0) {
      out.xs.push_back(s.xs[v + 1]);
      out.ys.push_back(s.ys[v + 1]);
      acc += seg;
    } else {
      double t = (want - acc) / seg;
      out.xs.push_back(s.xs[v] + t * (s.xs[v + 1] - s.xs[v]));
      out.ys.push_back(s.ys[v] + t * (s.ys[v + 1] - s.ys[v]));
      acc = want;
    }
  }
  return out;
}

}  // namespace detail

/// Builds a jittered-grid sampling of a gently curved surface with engraved
/// groove strokes, roughness, and outliers. Strokes are added (the last one
/// length-trimmed) until the groove-covered sample fraction lands within
/// 0.02 of target_minority_fraction. Deterministic per seed; each phase
/// draws from its own sub-seeded stream.
inline LabeledCloud generate_surface(const SynthParams& p) {
  validate(p);
  const bool grooves = p.target_minority_fraction > 0.0;
  if (grooves && std::min(p.extent_w, p.extent_h) < 4.0 * p.groove_width)
    fail(errc::infeasible_coverage, "extent must be at least 4x groove_width per side to place grooves");

  const auto nx = static_cast<std::size_t>(std::llround(p.extent_w / p.sample_spacing)) + 1;
  const auto ny = static_cast<std::size_t>(std::llround(p.extent_h / p.sample_spacing)) + 1;
  const std::size_t n = nx * ny;

  std::vector<double> xs(n), ys(n), zs(n, 0.0);
  {
    Rng rng(subseed(p.seed, 1));
    const double j = 0.4 * p.sample_spacing;
    std::size_t k = 0;
    for (std::size_t iy = 0; iy < ny; ++iy) {
      for (std::size_t ix = 0; ix < nx; ++ix, ++k) {
        xs[k] = static_cast<double>(ix) * p.sample_spacing + rng.uniform(-j, j);
        ys[k] = static_cast<double>(iy) * p.sample_spacing + rng.uniform(-j, j);
      }
    }
  }

  // Two low-frequency sinusoids; wavelengths comfortably above extent/2 so
  // the patch-local base stays near-linear (the plane fit absorbs it without
  // shearing the projected footprint), the smoothing kernel all but removes
  // the rest, and the groove signal stays readable in the compensated map.
  {
    Rng rng(subseed(p.seed, 2));
    const double m = std::min(p.extent_w, p.extent_h);
    const double lam1 = 4.0 * m, lam2 = 2.8 * m;
    const double a1 = 0.6 * p.curvature_amp, a2 = 0.4 * p.curvature_amp;
    const double t1 = rng.uniform(0.0, 2.0 * kPi), f1 = rng.uniform(0.0, 2.0 * kPi);
    const double t2 = rng.uniform(0.0, 2.0 * kPi), f2 = rng.uniform(0.0, 2.0 * kPi);
    const double k1 = 2.0 * kPi / lam1, k2 = 2.0 * kPi / lam2;
    const double c1 = std::cos(t1), s1 = std::sin(t1), c2 = std::cos(t2), s2 = std::sin(t2);
    for (std::size_t i = 0; i < n; ++i)
      zs[i] = a1 * std::sin(k1 * (c1 * xs[i] + s1 * ys[i]) + f1) +
              a2 * std::sin(k2 * (c2 * xs[i] + s2 * ys[i]) + f2);
  }

  std::vector<int> labels(n, 1);
  if (grooves) {
    Rng rng(subseed(p.seed, 3));
    detail::PointBuckets buckets(xs, ys, std::max(p.groove_width, 4.0 * p.sample_spacing));
    std::vector<double> stamp(n, 0.0), best(n, 0.0);
    std::vector<std::uint32_t> mark(n, 0), idx;
    std::vector<double> dist;
    std::uint32_t tag = 0;

    const double lo = p.target_minority_fraction - 0.005;
    const double hi = p.target_minority_fraction + 0.015;
    std::size_t covered = 0, accepted = 0;
    const double m = std::min(p.extent_w, p.extent_h);
    bool done = false;

    for (int attempt = 0; attempt < 10000 && !done; ++attempt) {
      detail::Stroke s;
      double x = rng.uniform(0.0, p.extent_w), y = rng.uniform(0.0, p.extent_h);
      double heading = rng.uniform(0.0, 2.0 * kPi);
      s.xs.push_back(x);
      s.ys.push_back(y);
      std::size_t nseg = 3 + rng.below(4);
      for (std::size_t g = 0; g < nseg; ++g) {
        double len = rng.uniform(0.15, 0.35) * m;
        x += len * std::cos(heading);
        y += len * std::sin(heading);
        s.xs.push_back(x);
        s.ys.push_back(y);
        heading += rng.uniform(-0.6, 0.6);
      }

      auto coverage_with = [&](const detail::Stroke& st) {
        ++tag;
        detail::stroke_hits(st, buckets, xs, ys, p.groove_width, idx, dist, mark, tag, best);
        std::size_t add = 0;
        for (std::uint32_t i : idx)
          if (labels[i] == 1) ++add;
        return static_cast<double>(covered + add) / static_cast<double>(n);
      };

      detail::Stroke chosen = s;
      double f = coverage_with(s);
      if (f > hi) {
        double left = 0.0, right = 1.0;
        bool found = false;
        for (int it = 0; it < 30; ++it) {
          double mid = 0.5 * (left + right);
          chosen = detail::truncate_stroke(s, mid);
          f = coverage_with(chosen);
          if (f > hi) right = mid;
          else if (f <= lo) left = mid;
          else { found = true; break; }
        }
        if (!found) continue;  // even a trimmed stroke jumps past the window; redraw
      }
      // stamp `chosen` (its hits are still in idx/dist from the last call)
      for (std::size_t k = 0; k < idx.size(); ++k) {
        std::uint32_t i = idx[k];
        if (labels[i] == 1) { labels[i] = 2; ++covered; }
        stamp[i] = std::max(stamp[i], p.groove_depth * std::cos(kPi * dist[k] / p.groove_width));
      }
      ++accepted;
      double frac = static_cast<double>(covered) / static_cast<double>(n);
      if (frac > lo && accepted >= 1) done = true;
    }
    if (!done)
      fail(errc::infeasible_coverage, "could not reach the target groove coverage within 10000 strokes");
    for (std::size_t i = 0; i < n; ++i) zs[i] -= stamp[i];
  }

  if (p.roughness_sigma > 0.0) {
    Rng rng(subseed(p.seed, 4));
    for (std::size_t i = 0; i < n; ++i) zs[i] += p.roughness_sigma * rng.normal();
  }
  if (p.outlier_fraction > 0.0 && p.outlier_amp > 0.0) {
    Rng rng(subseed(p.seed, 5));
    for (std::size_t i = 0; i < n; ++i)
      if (rng.bernoulli(p.outlier_fraction)) zs[i] += rng.uniform(-p.outlier_amp, p.outlier_amp);
  }

  // Small rigid motion so the support plane is a real fit, not z=0.
  LabeledCloud out;
  out.cloud.points.resize(n);
  out.labels = std::move(labels);
  {
    Rng rng(subseed(p.seed, 6));
    const double deg = kPi / 180.0;
    double rx = rng.uniform(-5.0 * deg, 5.0 * deg);
    double ry = rng.uniform(-5.0 * deg, 5.0 * deg);
    double tx = rng.uniform(-2.0, 2.0), ty = rng.uniform(-2.0, 2.0), tz = rng.uniform(-2.0, 2.0);
    double cx = 0.5 * p.extent_w, cy = 0.5 * p.extent_h;
    double crx = std::cos(rx), srx = std::sin(rx), cry = std::cos(ry), sry = std::sin(ry);
    for (std::size_t i = 0; i < n; ++i) {
      double px = xs[i] - cx, py = ys[i] - cy, pz = zs[i];
      // Rx then Ry
      double y1 = crx * py - srx * pz;
      double z1 = srx * py + crx * pz;
      double x2 = cry * px + sry * z1;
      double z2 = -sry * px + cry * z1;
      out.cloud.points[i] = {x2 + cx + tx, y1 + cy + ty, z2 + tz};
    }
  }
  return out;
}

/// Rasterizes per-point class ids on the same grid geometry the value map
/// uses: cell label 2 when at least half of its points are class 2; empty
/// cells invalid.
inline GridMap rasterize_labels(const LabeledCloud& labeled, const SupportPlane& plane, double pixel_size,
                                std::size_t cell_cap = kDefaultGridCellCap) {
  if (labeled.labels.size() != labeled.cloud.points.size())
    fail(errc::inconsistent_lengths, "labels and cloud differ in length");
  ProjectedPoints proj = project_to_plane(labeled.cloud, plane);
  detail::GridGeometry g = detail::grid_geometry(proj, pixel_size, cell_cap);
  GridMap map = detail::empty_map(g);
  std::vector<std::uint32_t> total(map.cells(), 0), class2(map.cells(), 0);
  for (std::size_t i = 0; i < proj.u.size(); ++i) {
    std::size_t c = g.row(proj.v[i]) * g.width + g.col(proj.u[i]);
    ++total[c];
    if (labeled.labels[i] == 2) ++class2[c];
  }
  for (std::size_t c = 0; c < map.cells(); ++c) {
    if (total[c] == 0) continue;
    map.valid[c] = 1;
    map.values[c] = (2 * class2[c] >= total[c]) ? 2.0 : 1.0;
  }
  return map;
}

inline nlohmann::json synth_params_to_json(const SynthParams& p) {
  return {{"extent_w", p.extent_w},
          {"extent_h", p.extent_h},
          {"sample_spacing", p.sample_spacing},
          {"curvature_amp", p.curvature_amp},
          {"groove_depth", p.groove_depth},
          {"groove_width", p.groove_width},
          {"roughness_sigma", p.roughness_sigma},
          {"outlier_fraction", p.outlier_fraction},
          {"outlier_amp", p.outlier_amp},
          {"target_minority_fraction", p.target_minority_fraction},
          {"seed", p.seed}};
}

}  // namespace topomap
