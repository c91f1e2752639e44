#pragma once

// Shared helpers for the unit suites: error-code capture, temp files, and
// small map/dataset builders.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "topomap/common.hpp"
#include "topomap/raster.hpp"
#include "topomap/rng.hpp"

namespace testsupport {

// Runs f, which must throw topomap::Error, and returns the code it threw.
template <typename F>
topomap::errc thrown_code(F&& f) {
  try {
    f();
  } catch (const topomap::Error& e) {
    return e.code();
  }
  FAIL("expected a topomap::Error");
  return topomap::errc::io_error;  // unreachable
}

// Per-process scratch directory; unique filenames via a counter.
inline std::filesystem::path tmp_file(const std::string& stem) {
  static std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("topomap_tests_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  static std::atomic<unsigned> counter{0};
  return dir / (std::to_string(counter++) + "_" + stem);
}

inline topomap::GridMap make_map(std::size_t w, std::size_t h, double fill = 0.0,
                                 double pixel_size = 1.0) {
  topomap::GridMap m;
  m.width = w;
  m.height = h;
  m.pixel_size = pixel_size;
  m.origin_u = 0.0;
  m.origin_v = 0.0;
  m.values.assign(w * h, fill);
  m.valid.assign(w * h, 1);
  return m;
}

inline topomap::GridMap random_map(std::size_t w, std::size_t h, std::uint64_t seed,
                                   double lo = -1.0, double hi = 1.0) {
  topomap::GridMap m = make_map(w, h);
  topomap::Rng rng(seed);
  for (double& v : m.values) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace testsupport
