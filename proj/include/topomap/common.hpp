#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace topomap {

inline constexpr double kPi = 3.14159265358979323846;

enum class errc {
  // file parsing / IO
  malformed_header,
  unsupported_format,
  missing_coordinate_property,
  truncated_body,
  parse_error,
  non_finite_coordinate,
  io_error,
  // cloud / plane
  empty_cloud,
  degenerate_cloud,
  numerical_failure,
  // raster
  empty_projection,
  grid_too_large,
  all_invalid,
  // topo
  invalid_size,
  kernel_larger_than_map,
  invalid_cells,
  map_too_small,
  negative_input,
  // features
  block_larger_than_map,
  invalid_block_geometry,
  degenerate_range,
  block_too_small,
  geometry_mismatch,
  inconsistent_lengths,
  empty_dataset,
  // classify
  single_class_dataset,
  no_useful_split,
  dimension_mismatch,
  too_few_samples,
  length_mismatch,
  zero_variance,
  // synth
  infeasible_coverage,
  // config
  bad_config,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::malformed_header: return "malformed_header";
    case errc::unsupported_format: return "unsupported_format";
    case errc::missing_coordinate_property: return "missing_coordinate_property";
    case errc::truncated_body: return "truncated_body";
    case errc::parse_error: return "parse_error";
    case errc::non_finite_coordinate: return "non_finite_coordinate";
    case errc::io_error: return "io_error";
    case errc::empty_cloud: return "empty_cloud";
    case errc::degenerate_cloud: return "degenerate_cloud";
    case errc::numerical_failure: return "numerical_failure";
    case errc::empty_projection: return "empty_projection";
    case errc::grid_too_large: return "grid_too_large";
    case errc::all_invalid: return "all_invalid";
    case errc::invalid_size: return "invalid_size";
    case errc::kernel_larger_than_map: return "kernel_larger_than_map";
    case errc::invalid_cells: return "invalid_cells";
    case errc::map_too_small: return "map_too_small";
    case errc::negative_input: return "negative_input";
    case errc::block_larger_than_map: return "block_larger_than_map";
    case errc::invalid_block_geometry: return "invalid_block_geometry";
    case errc::degenerate_range: return "degenerate_range";
    case errc::block_too_small: return "block_too_small";
    case errc::geometry_mismatch: return "geometry_mismatch";
    case errc::inconsistent_lengths: return "inconsistent_lengths";
    case errc::empty_dataset: return "empty_dataset";
    case errc::single_class_dataset: return "single_class_dataset";
    case errc::no_useful_split: return "no_useful_split";
    case errc::dimension_mismatch: return "dimension_mismatch";
    case errc::too_few_samples: return "too_few_samples";
    case errc::length_mismatch: return "length_mismatch";
    case errc::zero_variance: return "zero_variance";
    case errc::infeasible_coverage: return "infeasible_coverage";
    case errc::bad_config: return "bad_config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

namespace detail {

// Little-endian scalar encode/decode. The host is assumed to use IEEE-754;
// byte order is handled explicitly so file formats stay portable.
template <typename T>
inline void store_le(unsigned char* dst, T value) {
  static_assert(sizeof(T) <= 8);
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
}

template <typename T>
inline T load_le(const unsigned char* src) {
  static_assert(sizeof(T) <= 8);
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Derives an independent stream seed from a master seed and a small tag.
// Components seeded this way stay reproducible regardless of how much
// randomness other components consume.
inline std::uint64_t subseed(std::uint64_t master, std::uint64_t tag) {
  return detail::splitmix64(master + tag * 0x9E3779B97F4A7C15ull);
}

}  // namespace topomap
