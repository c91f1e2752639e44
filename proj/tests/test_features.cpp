#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "topomap/features.hpp"

using namespace topomap;
using testsupport::make_map;
using testsupport::random_map;
using testsupport::thrown_code;
using testsupport::tmp_file;

namespace {

Block fill_block(std::size_t size, double (*f)(std::size_t, std::size_t)) {
  Block b;
  b.size = size;
  b.pixels.resize(size * size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) b.pixels[y * size + x] = f(x, y);
  return b;
}

Block random_block(std::size_t size, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Block b;
  b.size = size;
  b.pixels.resize(size * size);
  Rng rng(seed);
  for (double& v : b.pixels) v = rng.uniform(lo, hi);
  return b;
}

}  // namespace

TEST_CASE("orthonormal dct basics", "[features]") {
  SECTION("constant vector concentrates in the dc term") {
    std::vector<double> c = dct1d({1.0, 1.0, 1.0, 1.0});
    CHECK_THAT(c[0], Catch::Matchers::WithinAbs(2.0, 1e-14));
    for (std::size_t k = 1; k < 4; ++k) CHECK_THAT(c[k], Catch::Matchers::WithinAbs(0.0, 1e-14));
  }
  SECTION("zero maps to zero") {
    for (double v : dct1d(std::vector<double>(9, 0.0))) CHECK(v == 0.0);
  }
  SECTION("energy is preserved and the transform inverts") {
    Rng rng(70);
    std::vector<double> v(16);
    for (double& e : v) e = rng.uniform(-2.0, 2.0);
    std::vector<double> c = dct1d(v);
    double ev = 0.0, ec = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) { ev += v[i] * v[i]; ec += c[i] * c[i]; }
    CHECK_THAT(ec, Catch::Matchers::WithinAbs(ev, 1e-10));
    // inverse = DCT-III with the same scaling
    for (std::size_t i = 0; i < v.size(); ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        double s = (k == 0) ? std::sqrt(1.0 / 16.0) : std::sqrt(2.0 / 16.0);
        acc += s * c[k] * std::cos(kPi * static_cast<double>((2 * i + 1) * k) / 32.0);
      }
      CHECK_THAT(acc, Catch::Matchers::WithinAbs(v[i], 1e-10));
    }
  }
}

TEST_CASE("histogram-shape features", "[features]") {
  SECTION("constant block has a closed-form spectrum") {
    Block b = fill_block(16, [](std::size_t, std::size_t) { return 0.3; });
    std::vector<double> g = ghs(b, 64, {0.0, 1.0}, 30);
    REQUIRE(g.size() == 30);
    // all mass lands in bin floor(0.3 * 64) = 19
    for (std::size_t k = 0; k < 30; ++k) {
      double s = (k == 0) ? std::sqrt(1.0 / 64.0) : std::sqrt(2.0 / 64.0);
      double expected = s * std::cos(kPi * static_cast<double>((2 * 19 + 1) * k) / 128.0);
      CHECK_THAT(g[k], Catch::Matchers::WithinAbs(expected, 1e-12));
    }
  }
  SECTION("out-of-range values clamp to the edge bins") {
    Block b;
    b.size = 2;
    b.pixels = {-5.0, 7.0, -5.0, 7.0};
    std::vector<double> g = ghs(b, 64, {0.0, 1.0}, 30);
    for (std::size_t k = 0; k < 30; ++k) {
      double s = (k == 0) ? std::sqrt(1.0 / 64.0) : std::sqrt(2.0 / 64.0);
      double expected = s * 0.5 *
                        (std::cos(kPi * static_cast<double>(k) / 128.0) +
                         std::cos(kPi * static_cast<double>((2 * 63 + 1) * k) / 128.0));
      CHECK_THAT(g[k], Catch::Matchers::WithinAbs(expected, 1e-12));
    }
  }
  SECTION("invariant under pixel permutation") {
    Block b = random_block(16, 71);
    Block shuffled = b;
    std::mt19937 g(7);
    std::shuffle(shuffled.pixels.begin(), shuffled.pixels.end(), g);
    CHECK(ghs(b, 64, {0.0, 1.0}, 30) == ghs(shuffled, 64, {0.0, 1.0}, 30));
  }
  SECTION("bad arguments") {
    Block b = random_block(16, 72);
    CHECK(thrown_code([&] { ghs(b, 64, {1.0, 1.0}, 30); }) == errc::degenerate_range);
    CHECK(thrown_code([&] { ghs(b, 64, {0.0, 1.0}, 65); }) == errc::invalid_size);
  }
}

TEST_CASE("spatial-frequency features", "[features]") {
  SECTION("constant block is pure dc") {
    Block b = fill_block(32, [](std::size_t, std::size_t) { return 0.25; });
    std::vector<double> s = sf(b);
    REQUIRE(s.size() == 64);
    CHECK_THAT(s[0], Catch::Matchers::WithinAbs(32.0 * 0.25, 1e-10));
    for (std::size_t i = 1; i < 64; ++i) CHECK_THAT(s[i], Catch::Matchers::WithinAbs(0.0, 1e-10));
  }
  SECTION("horizontal unit-frequency cosine hits exactly one coefficient") {
    Block b = fill_block(32, [](std::size_t x, std::size_t) {
      return std::cos(kPi * static_cast<double>(2 * x + 1) / 64.0);
    });
    std::vector<double> s = sf(b);
    for (std::size_t i = 0; i < 64; ++i) {
      double expected = (i == 1) ? 32.0 / std::sqrt(2.0) : 0.0;
      CHECK_THAT(s[i], Catch::Matchers::WithinAbs(expected, 1e-9));
    }
  }
  SECTION("random block matches the quadruple-loop oracle") {
    Block b = random_block(16, 73, -1.0, 1.0);
    std::vector<double> s = sf(b);
    for (std::size_t ky = 0; ky < 8; ++ky)
      for (std::size_t kx = 0; kx < 8; ++kx) {
        double acc = 0.0;
        for (std::size_t y = 0; y < 16; ++y)
          for (std::size_t x = 0; x < 16; ++x)
            acc += b.at(x, y) *
                   std::cos(kPi * static_cast<double>((2 * x + 1) * kx) / 32.0) *
                   std::cos(kPi * static_cast<double>((2 * y + 1) * ky) / 32.0);
        double sx = (kx == 0) ? std::sqrt(1.0 / 16.0) : std::sqrt(2.0 / 16.0);
        double sy = (ky == 0) ? std::sqrt(1.0 / 16.0) : std::sqrt(2.0 / 16.0);
        CHECK_THAT(s[ky * 8 + kx], Catch::Matchers::WithinAbs(sx * sy * acc, 1e-9));
      }
  }
  SECTION("undersized block rejected") {
    CHECK(thrown_code([] { sf(random_block(7, 74)); }) == errc::block_too_small);
  }
}

namespace {

// Independent uniform-pattern table and histogram, straight from the
// definition: 8 neighbors starting east counterclockwise, >= center sets the
// bit, codes with more than two circular transitions pool into bin 58.
std::vector<double> lbp_oracle(const Block& b) {
  auto transitions = [](int code) {
    int t = 0;
    for (int i = 0; i < 8; ++i)
      if (((code >> i) & 1) != ((code >> ((i + 1) % 8)) & 1)) ++t;
    return t;
  };
  std::array<int, 256> bin{};
  int next = 0;
  for (int c = 0; c < 256; ++c) bin[static_cast<std::size_t>(c)] = (transitions(c) <= 2) ? next++ : 58;
  static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  std::vector<double> hist(59, 0.0);
  const long long n = static_cast<long long>(b.size);
  for (long long y = 1; y < n - 1; ++y)
    for (long long x = 1; x < n - 1; ++x) {
      int code = 0;
      for (int k = 0; k < 8; ++k)
        if (b.at(static_cast<std::size_t>(x + dx[k]), static_cast<std::size_t>(y + dy[k])) >=
            b.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)))
          code |= 1 << k;
      hist[static_cast<std::size_t>(bin[static_cast<std::size_t>(code)])] += 1.0;
    }
  double total = static_cast<double>((n - 2) * (n - 2));
  for (double& h : hist) h /= total;
  return hist;
}

}  // namespace

TEST_CASE("local binary patterns", "[features]") {
  SECTION("constant block fills a single uniform bin") {
    std::vector<double> h = lbp_histogram(fill_block(16, [](std::size_t, std::size_t) { return 1.0; }));
    REQUIRE(h.size() == 59);
    std::size_t nonzero = 0;
    for (double v : h)
      if (v != 0.0) { ++nonzero; CHECK(v == 1.0); }
    CHECK(nonzero == 1);
  }
  SECTION("histogram is a probability distribution") {
    std::vector<double> h = lbp_histogram(random_block(20, 75));
    double sum = 0.0;
    for (double v : h) { CHECK(v >= 0.0); sum += v; }
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  SECTION("matches the direct oracle") {
    for (std::uint64_t seed = 76; seed < 79; ++seed) {
      Block b = random_block(16, seed, -1.0, 1.0);
      CHECK(lbp_histogram(b) == lbp_oracle(b));
    }
  }
  SECTION("invariant under strictly monotone value transforms") {
    Block b = random_block(12, 79);
    Block warped = b;
    for (double& v : warped.pixels) v = std::exp(3.0 * v);
    CHECK(lbp_histogram(b) == lbp_histogram(warped));
  }
  SECTION("undersized block rejected") {
    CHECK(thrown_code([] { lbp_histogram(random_block(2, 80)); }) == errc::block_too_small);
  }
}

namespace {

// Brute-force co-occurrence features: quantize to n_levels over the block's
// own range, count symmetric pairs per offset, then the four Haralick stats.
std::vector<double> glcm_oracle(const Block& b, std::size_t n_levels) {
  double lo = b.pixels[0], hi = b.pixels[0];
  for (double v : b.pixels) { lo = std::min(lo, v); hi = std::max(hi, v); }
  std::vector<int> q(b.pixels.size(), 0);
  if (hi > lo)
    for (std::size_t i = 0; i < b.pixels.size(); ++i) {
      auto l = static_cast<long long>(std::floor((b.pixels[i] - lo) * static_cast<double>(n_levels) / (hi - lo)));
      q[i] = static_cast<int>(std::clamp(l, 0LL, static_cast<long long>(n_levels) - 1));
    }
  static constexpr int offs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  std::vector<double> out;
  const long long n = static_cast<long long>(b.size);
  for (auto& off : offs) {
    std::vector<double> m(n_levels * n_levels, 0.0);
    double total = 0.0;
    for (long long y = 0; y < n; ++y)
      for (long long x = 0; x < n; ++x) {
        long long x2 = x + off[0], y2 = y + off[1];
        if (x2 < 0 || x2 >= n || y2 < 0 || y2 >= n) continue;
        int a = q[static_cast<std::size_t>(y * n + x)], c = q[static_cast<std::size_t>(y2 * n + x2)];
        m[static_cast<std::size_t>(a) * n_levels + static_cast<std::size_t>(c)] += 1.0;
        m[static_cast<std::size_t>(c) * n_levels + static_cast<std::size_t>(a)] += 1.0;
        total += 2.0;
      }
    for (double& v : m) v /= total;
    double contrast = 0, energy = 0, homog = 0;
    std::vector<double> marg(n_levels, 0.0);
    for (std::size_t i = 0; i < n_levels; ++i)
      for (std::size_t j = 0; j < n_levels; ++j) {
        double p = m[i * n_levels + j], d = static_cast<double>(i) - static_cast<double>(j);
        contrast += d * d * p;
        energy += p * p;
        homog += p / (1.0 + d * d);
        marg[i] += p;
      }
    double mu = 0, var = 0;
    for (std::size_t i = 0; i < n_levels; ++i) mu += static_cast<double>(i) * marg[i];
    for (std::size_t i = 0; i < n_levels; ++i)
      var += (static_cast<double>(i) - mu) * (static_cast<double>(i) - mu) * marg[i];
    double corr = 0.0;
    if (var > 0.0) {
      double cov = 0.0;
      for (std::size_t i = 0; i < n_levels; ++i)
        for (std::size_t j = 0; j < n_levels; ++j)
          cov += (static_cast<double>(i) - mu) * (static_cast<double>(j) - mu) * m[i * n_levels + j];
      corr = cov / var;  // symmetric matrix: both marginals coincide
    }
    out.insert(out.end(), {contrast, corr, energy, homog});
  }
  return out;
}

}  // namespace

TEST_CASE("co-occurrence features", "[features]") {
  SECTION("constant block") {
    std::vector<double> f = glcm_features(fill_block(16, [](std::size_t, std::size_t) { return 2.0; }), 16);
    REQUIRE(f.size() == 16);
    for (std::size_t o = 0; o < 4; ++o) {
      CHECK(f[4 * o + 0] == 0.0);  // contrast
      CHECK(f[4 * o + 1] == 0.0);  // correlation (degenerate marginals)
      CHECK_THAT(f[4 * o + 2], Catch::Matchers::WithinAbs(1.0, 1e-12));  // energy
      CHECK_THAT(f[4 * o + 3], Catch::Matchers::WithinAbs(1.0, 1e-12));  // homogeneity
    }
  }
  SECTION("checkerboard at two levels") {
    Block b = fill_block(4, [](std::size_t x, std::size_t y) { return static_cast<double>((x + y) % 2); });
    std::vector<double> f = glcm_features(b, 2);
    // horizontal and vertical neighbors always differ, diagonals always agree;
    // the 3x3 diagonal pair set splits 5:4 by parity, so its energy is
    // (5/9)^2 + (4/9)^2 = 41/81
    const double d = 41.0 / 81.0;
    const double expected[16] = {1, -1, 0.5, 0.5, 1, -1, 0.5, 0.5, 0, 1, d, 1, 0, 1, d, 1};
    for (std::size_t i = 0; i < 16; ++i)
      CHECK_THAT(f[i], Catch::Matchers::WithinAbs(expected[i], 1e-12));
  }
  SECTION("random blocks match the brute-force oracle") {
    for (std::uint64_t seed = 81; seed < 84; ++seed) {
      Block b = random_block(8, seed, -1.0, 1.0);
      std::vector<double> f = glcm_features(b, 16);
      std::vector<double> o = glcm_oracle(b, 16);
      for (std::size_t i = 0; i < 16; ++i)
        CHECK_THAT(f[i], Catch::Matchers::WithinAbs(o[i], 1e-12));
    }
  }
  SECTION("needs at least two levels") {
    CHECK(thrown_code([] { glcm_features(random_block(8, 85), 1); }) == errc::invalid_size);
  }
}

namespace {

// Reference implementation of the gradient-orientation descriptor, written
// directly from its definition.
std::vector<double> hog_oracle(const Block& b, const HogParams& p) {
  const std::size_t n = b.size;
  const std::size_t ncells = n / p.cell;
  std::vector<double> cells(ncells * ncells * p.bins, 0.0);
  const double bw = kPi / static_cast<double>(p.bins);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      double gx = (x == 0)       ? b.at(1, y) - b.at(0, y)
                  : (x == n - 1) ? b.at(n - 1, y) - b.at(n - 2, y)
                                 : 0.5 * (b.at(x + 1, y) - b.at(x - 1, y));
      double gy = (y == 0)       ? b.at(x, 1) - b.at(x, 0)
                  : (y == n - 1) ? b.at(x, n - 1) - b.at(x, n - 2)
                                 : 0.5 * (b.at(x, y + 1) - b.at(x, y - 1));
      double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double th = std::atan2(gy, gx);
      if (th < 0.0) th += kPi;
      if (th >= kPi) th -= kPi;
      double t = th / bw - 0.5;
      double fl = std::floor(t);
      auto b0 = static_cast<long long>(fl);
      auto nb = static_cast<long long>(p.bins);
      std::size_t bin0 = static_cast<std::size_t>(((b0 % nb) + nb) % nb);
      double* h = cells.data() + ((y / p.cell) * ncells + x / p.cell) * p.bins;
      h[bin0] += mag * (1.0 - (t - fl));
      h[(bin0 + 1) % p.bins] += mag * (t - fl);
    }
  std::vector<double> out;
  const std::size_t pos = ncells - p.block_cells + 1;
  for (std::size_t by = 0; by < pos; ++by)
    for (std::size_t bx = 0; bx < pos; ++bx) {
      std::vector<double> v;
      for (std::size_t cy = by; cy < by + p.block_cells; ++cy)
        for (std::size_t cx = bx; cx < bx + p.block_cells; ++cx)
          for (std::size_t k = 0; k < p.bins; ++k) v.push_back(cells[(cy * ncells + cx) * p.bins + k]);
      double n2 = 0.0;
      for (double e : v) n2 += e * e;
      if (n2 > 0.0) {
        for (double& e : v) e = std::min(e / std::sqrt(n2), p.clip);
        n2 = 0.0;
        for (double e : v) n2 += e * e;
        if (n2 > 0.0)
          for (double& e : v) e /= std::sqrt(n2);
      }
      out.insert(out.end(), v.begin(), v.end());
    }
  return out;
}

}  // namespace

TEST_CASE("gradient-orientation descriptor", "[features]") {
  SECTION("length for a 32-pixel block") {
    CHECK(hog_length(32) == 324);
  }
  SECTION("constant block gives an all-zero descriptor") {
    std::vector<double> h = hog_features(fill_block(32, [](std::size_t, std::size_t) { return 5.0; }));
    REQUIRE(h.size() == 324);
    for (double v : h) CHECK(v == 0.0);
  }
  SECTION("a pure vertical ramp concentrates one orientation bin") {
    Block b = fill_block(32, [](std::size_t, std::size_t y) { return 3.0 * static_cast<double>(y); });
    std::vector<double> h = hog_features(b);
    // gradient (0, 3) everywhere: orientation pi/2 = center of bin 4 of 9
    for (std::size_t i = 0; i < h.size(); ++i) {
      double expected = (i % 9 == 4) ? 0.5 : 0.0;
      CHECK_THAT(h[i], Catch::Matchers::WithinAbs(expected, 1e-9));
    }
  }
  SECTION("random blocks match the reference implementation") {
    for (std::uint64_t seed = 86; seed < 89; ++seed) {
      Block b = random_block(32, seed, -1.0, 1.0);
      std::vector<double> got = hog_features(b);
      std::vector<double> want = hog_oracle(b, HogParams{});
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i)
        CHECK_THAT(got[i], Catch::Matchers::WithinAbs(want[i], 1e-9));
    }
  }
  SECTION("geometry violations") {
    CHECK(thrown_code([] { hog_features(random_block(20, 90)); }) == errc::geometry_mismatch);
    CHECK(thrown_code([] { hog_features(random_block(8, 91)); }) == errc::geometry_mismatch);
  }
}

TEST_CASE("blockify cuts stride-aligned windows", "[features]") {
  GridMap map = random_map(64, 64, 92);
  SECTION("non-overlapping tiling") {
    std::vector<Block> blocks = blockify(map, nullptr, 32, 32, 0.5);
    REQUIRE(blocks.size() == 4);
    CHECK(blocks[0].origin_x == 0);
    CHECK(blocks[1].origin_x == 32);
    CHECK(blocks[2].origin_y == 32);
    CHECK(blocks[3].origin_x == 32);
    CHECK(blocks[3].origin_y == 32);
    for (const Block& b : blocks)
      for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x)
          CHECK(b.at(x, y) == map.at(b.origin_x + x, b.origin_y + y));
  }
  SECTION("overlapping stride") {
    CHECK(blockify(map, nullptr, 32, 16, 0.5).size() == 9);
  }
  SECTION("blocks over invalid pixels are dropped") {
    GridMap holed = map;
    holed.valid[5 * 64 + 5] = 0;
    CHECK(blockify(holed, nullptr, 32, 32, 0.5).size() == 3);
  }
  SECTION("geometry violations") {
    CHECK(thrown_code([&] { blockify(map, nullptr, 128, 32, 0.5); }) == errc::block_larger_than_map);
    CHECK(thrown_code([&] { blockify(map, nullptr, 8, 8, 0.5); }) == errc::invalid_block_geometry);
    CHECK(thrown_code([&] { blockify(map, nullptr, 32, 0, 0.5); }) == errc::invalid_block_geometry);
    CHECK(thrown_code([&] { blockify(map, nullptr, 32, 32, 0.0); }) == errc::invalid_block_geometry);
    CHECK(thrown_code([&] { blockify(map, nullptr, 32, 32, 1.5); }) == errc::invalid_block_geometry);
    GridMap small = random_map(32, 32, 93);
    CHECK(thrown_code([&] { blockify(map, &small, 32, 32, 0.5); }) == errc::geometry_mismatch);
  }
}

TEST_CASE("blockify labels by the marked-pixel fraction", "[features]") {
  GridMap map = random_map(32, 32, 94);
  GridMap labels = make_map(32, 32, 1.0);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 32; ++x) labels.at(x, y) = 2.0;
  SECTION("exactly at threshold counts as class 2") {
    std::vector<Block> blocks = blockify(map, &labels, 32, 32, 0.5);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].label == 2);
  }
  SECTION("one pixel below threshold is class 1") {
    labels.at(0, 0) = 1.0;
    std::vector<Block> blocks = blockify(map, &labels, 32, 32, 0.5);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].label == 1);
  }
  SECTION("only label-valid pixels count") {
    // invalidate the class-1 half: among valid labels everything is class 2
    for (std::size_t y = 16; y < 32; ++y)
      for (std::size_t x = 0; x < 32; ++x) labels.valid[y * 32 + x] = 0;
    std::vector<Block> blocks = blockify(map, &labels, 32, 32, 0.9);
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].label == 2);
  }
  SECTION("blocks with no labeled pixel are skipped") {
    for (std::size_t i = 0; i < labels.cells(); ++i) labels.valid[i] = 0;
    CHECK(blockify(map, &labels, 32, 32, 0.5).empty());
  }
}

TEST_CASE("dataset assembly concatenates family columns", "[features]") {
  GridMap map = random_map(64, 64, 95);
  std::vector<Block> blocks = blockify(map, nullptr, 32, 16, 0.5);
  FeatureParams params;
  params.value_range = {-1.0, 1.0};
  SECTION("single family") {
    LabeledDataset ds = assemble_dataset(blocks, {Family::ghs}, params);
    CHECK(ds.n_features == 30);
    CHECK(ds.n_rows() == blocks.size());
    REQUIRE(ds.layout.size() == 1);
    CHECK(ds.layout[0].name == "ghs");
    CHECK(ds.layout[0].offset == 0);
    CHECK(ds.layout[0].length == 30);
  }
  SECTION("ghs plus sf gives 94 columns in declared order") {
    LabeledDataset ds = assemble_dataset(blocks, {Family::ghs, Family::sf}, params);
    REQUIRE(ds.n_features == 94);
    REQUIRE(ds.layout.size() == 2);
    CHECK(ds.layout[0].offset == 0);
    CHECK(ds.layout[0].length == 30);
    CHECK(ds.layout[1].name == "sf");
    CHECK(ds.layout[1].offset == 30);
    CHECK(ds.layout[1].length == 64);
    std::vector<double> g = ghs(blocks[2], params.ghs_bins, params.value_range, params.ghs_coef);
    std::vector<double> s = sf(blocks[2]);
    for (std::size_t c = 0; c < 30; ++c) CHECK(ds.at(2, c) == g[c]);
    for (std::size_t c = 0; c < 64; ++c) CHECK(ds.at(2, 30 + c) == s[c]);
  }
  SECTION("failure modes") {
    CHECK(thrown_code([&] { assemble_dataset({}, {Family::ghs}, params); }) == errc::empty_dataset);
    CHECK(thrown_code([&] { assemble_dataset(blocks, {}, params); }) == errc::bad_config);
    std::vector<Block> mixed = {random_block(32, 96), random_block(16, 97)};
    CHECK(thrown_code([&] { assemble_dataset(mixed, {Family::hog}, params); }) ==
          errc::inconsistent_lengths);
  }
}

TEST_CASE("csv round-trips datasets exactly", "[features]") {
  GridMap map = random_map(64, 64, 98);
  GridMap labels = make_map(64, 64, 1.0);
  for (std::size_t y = 0; y < 40; ++y)
    for (std::size_t x = 0; x < 64; ++x) labels.at(x, y) = 2.0;
  std::vector<Block> blocks = blockify(map, &labels, 32, 16, 0.5);
  FeatureParams params;
  params.value_range = {-1.0, 1.0};
  LabeledDataset ds = assemble_dataset(blocks, {Family::ghs, Family::sf}, params);

  std::string path = tmp_file("ds.csv");
  write_csv(path, ds);
  LabeledDataset back = read_csv(path);
  CHECK(back.n_features == ds.n_features);
  CHECK(back.x == ds.x);
  CHECK(back.y == ds.y);
  REQUIRE(back.layout.size() == ds.layout.size());
  for (std::size_t i = 0; i < ds.layout.size(); ++i) {
    CHECK(back.layout[i].name == ds.layout[i].name);
    CHECK(back.layout[i].offset == ds.layout[i].offset);
    CHECK(back.layout[i].length == ds.layout[i].length);
  }

  SECTION("header must end in a label column") {
    std::string bad = tmp_file("bad.csv");
    std::ofstream(bad) << "a_0,a_1\n1,2\n";
    CHECK(thrown_code([&] { read_csv(bad); }) == errc::parse_error);
  }
  SECTION("malformed numbers are reported with their line") {
    std::string bad = tmp_file("badnum.csv");
    std::ofstream(bad) << "ghs_0,label\n0.5,1\nx,2\n";
    try {
      read_csv(bad);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == errc::parse_error);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
}
