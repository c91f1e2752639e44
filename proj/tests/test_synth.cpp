#include <algorithm>
#include <cmath>
#include <numeric>

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "topomap/synth.hpp"

using namespace topomap;
using testsupport::thrown_code;

namespace {

SynthParams small_params(std::uint64_t seed) {
  SynthParams p;
  p.extent_w = 12.0;
  p.extent_h = 12.0;
  p.sample_spacing = 0.1;
  p.groove_width = 2.0;
  p.seed = seed;
  return p;
}

std::vector<double> depths(const LabeledCloud& lc) {
  SupportPlane plane = fit_support_plane(lc.cloud);
  ProjectedPoints proj = project_to_plane(lc.cloud, plane);
  std::vector<double> d(proj.d.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = -proj.d[i];
  return d;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("generator validates its parameters", "[synth]") {
  SynthParams p = small_params(0);
  SECTION("positive extents and spacing") {
    p.extent_w = 0.0;
    CHECK(thrown_code([&] { generate_surface(p); }) == errc::bad_config);
    p = small_params(0);
    p.sample_spacing = -0.1;
    CHECK(thrown_code([&] { generate_surface(p); }) == errc::bad_config);
  }
  SECTION("non-negative amplitudes") {
    p.curvature_amp = -1.0;
    CHECK(thrown_code([&] { generate_surface(p); }) == errc::bad_config);
    p = small_params(0);
    p.groove_depth = -0.5;
    CHECK(thrown_code([&] { generate_surface(p); }) == errc::bad_config);
  }
  SECTION("fractions live in [0, 1)") {
    p.outlier_fraction = 1.0;
    CHECK(thrown_code([&] { generate_surface(p); }) == errc::bad_config);
    p = small_params(0);
    p.target_minority_fraction = 1.0;
    CHECK(thrown_code([&] { generate_surface(p); }) == errc::bad_config);
  }
  SECTION("grooves need room") {
    p.groove_width = 4.0;  // extent 12 < 4 * 4
    CHECK(thrown_code([&] { generate_surface(p); }) == errc::infeasible_coverage);
    p.target_minority_fraction = 0.0;  // no grooves requested: fine
    LabeledCloud lc = generate_surface(p);
    CHECK(std::all_of(lc.labels.begin(), lc.labels.end(), [](int l) { return l == 1; }));
  }
}

TEST_CASE("point count follows the sampling grid", "[synth]") {
  SynthParams p = small_params(1);
  p.extent_w = 10.0;
  p.extent_h = 8.0;
  p.target_minority_fraction = 0.0;
  LabeledCloud lc = generate_surface(p);
  CHECK(lc.cloud.points.size() == 101 * 81);
  CHECK(lc.labels.size() == lc.cloud.points.size());
}

TEST_CASE("degenerate settings give a clean plane", "[synth]") {
  SynthParams p = small_params(2);
  p.curvature_amp = 0.0;
  p.groove_depth = 0.0;
  p.roughness_sigma = 0.0;
  p.outlier_fraction = 0.0;
  p.target_minority_fraction = 0.0;
  LabeledCloud lc = generate_surface(p);
  std::vector<double> d = depths(lc);
  for (double v : d) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.0, 1e-9));
}

TEST_CASE("generation is deterministic per seed", "[synth]") {
  LabeledCloud a = generate_surface(small_params(5));
  LabeledCloud b = generate_surface(small_params(5));
  REQUIRE(a.cloud.points.size() == b.cloud.points.size());
  CHECK(a.labels == b.labels);
  bool identical = true;
  for (std::size_t i = 0; i < a.cloud.points.size(); ++i) {
    identical = identical && a.cloud.points[i].x == b.cloud.points[i].x &&
                a.cloud.points[i].y == b.cloud.points[i].y && a.cloud.points[i].z == b.cloud.points[i].z;
  }
  CHECK(identical);

  LabeledCloud c = generate_surface(small_params(6));
  bool differs = false;
  for (std::size_t i = 0; i < a.cloud.points.size() && !differs; ++i)
    differs = a.cloud.points[i].z != c.cloud.points[i].z;
  CHECK(differs);
}

TEST_CASE("groove coverage lands in the target window", "[synth]") {
  for (std::uint64_t seed : {3, 9, 27}) {
    LabeledCloud lc = generate_surface(small_params(seed));
    double frac = static_cast<double>(std::count(lc.labels.begin(), lc.labels.end(), 2)) /
                  static_cast<double>(lc.labels.size());
    CHECK(frac > 0.166 - 0.005);
    CHECK(frac <= 0.166 + 0.015);
  }
}

TEST_CASE("defaults produce the full-resolution cloud", "[synth]") {
  SynthParams p;
  p.seed = 1;
  LabeledCloud lc = generate_surface(p);
  CHECK(lc.cloud.points.size() == 401 * 401);
  double frac = static_cast<double>(std::count(lc.labels.begin(), lc.labels.end(), 2)) /
                static_cast<double>(lc.labels.size());
  CHECK(frac > 0.161);
  CHECK(frac <= 0.181);
}

TEST_CASE("grooves carve to their nominal depth", "[synth]") {
  SynthParams p = small_params(4);
  p.curvature_amp = 0.0;
  p.roughness_sigma = 0.0;
  p.outlier_fraction = 0.0;
  LabeledCloud lc = generate_surface(p);
  std::vector<double> d = depths(lc);
  double base = median(d);

  SECTION("deepest carve is the stamp amplitude") {
    // the fitted plane tilts slightly toward the carved area, so allow a
    // modest margin above the nominal stamp depth
    double deepest = *std::max_element(d.begin(), d.end());
    CHECK(deepest - base >= 0.85 * p.groove_depth);
    CHECK(deepest - base <= 1.15 * p.groove_depth);
  }
  SECTION("depth splits by label") {
    double sum1 = 0.0, sum2 = 0.0;
    std::size_t n1 = 0, n2 = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (lc.labels[i] == 2) { sum2 += d[i]; ++n2; }
      else { sum1 += d[i]; ++n1; }
    }
    REQUIRE(n2 > 0);
    CHECK(sum2 / static_cast<double>(n2) - sum1 / static_cast<double>(n1) > 0.3 * p.groove_depth);
  }
  SECTION("deep points are always labeled engraving") {
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i] - base > 0.6 * p.groove_depth) CHECK(lc.labels[i] == 2);
  }
}

TEST_CASE("label rasterization follows the majority rule", "[synth]") {
  SECTION("constructed two-cell example") {
    LabeledCloud lc;
    lc.cloud.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0},  // one per corner
                       {0, 0, 0},                                   // duplicate: tie at (0,0)
                       {1, 1, 0}, {1, 1, 0}};                       // triple at (1,1)
    lc.labels = {1, 1, 1, 1, 2, 1, 2};
    SupportPlane plane = fit_support_plane(lc.cloud);
    GridMap m = rasterize_labels(lc, plane, 1.0);
    REQUIRE(m.width == 4);
    REQUIRE(m.height == 4);
    std::size_t n_valid = 0, n2 = 0;
    for (std::size_t i = 0; i < m.cells(); ++i) {
      if (!m.valid[i]) continue;
      ++n_valid;
      if (m.values[i] == 2.0) ++n2;
    }
    CHECK(n_valid == 4);
    CHECK(n2 == 1);  // the tied cell rounds up to class 2, the 1:2 cell stays 1
  }
  SECTION("generated surface: cell fractions track point fractions") {
    LabeledCloud lc = generate_surface(small_params(8));
    SupportPlane plane = fit_support_plane(lc.cloud);
    GridMap m = rasterize_labels(lc, plane, 0.065);
    double pts = static_cast<double>(std::count(lc.labels.begin(), lc.labels.end(), 2)) /
                 static_cast<double>(lc.labels.size());
    std::size_t n_valid = 0, n2 = 0;
    for (std::size_t i = 0; i < m.cells(); ++i) {
      if (!m.valid[i]) continue;
      ++n_valid;
      if (m.values[i] == 2.0) ++n2;
    }
    double cells = static_cast<double>(n2) / static_cast<double>(n_valid);
    CHECK_THAT(cells, Catch::Matchers::WithinAbs(pts, 0.03));
  }
  SECTION("length mismatch rejected") {
    LabeledCloud lc;
    lc.cloud.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    lc.labels = {1, 1};
    SupportPlane plane = fit_support_plane(lc.cloud);
    CHECK(thrown_code([&] { rasterize_labels(lc, plane, 1.0); }) == errc::inconsistent_lengths);
  }
}
