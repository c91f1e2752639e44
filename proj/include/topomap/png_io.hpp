#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "topomap/common.hpp"

namespace topomap {

struct ImageGray16 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> pixels;  // row-major, row 0 = top
};

namespace detail {

inline void push_u32be(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x >> 24));
  v.push_back(static_cast<unsigned char>(x >> 16));
  v.push_back(static_cast<unsigned char>(x >> 8));
  v.push_back(static_cast<unsigned char>(x));
}

inline std::uint32_t read_u32be(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void png_chunk(std::vector<unsigned char>& out, const char type[4],
                      const std::vector<unsigned char>& data) {
  push_u32be(out, static_cast<std::uint32_t>(data.size()));
  std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0, out.data() + type_at, static_cast<uInt>(4 + data.size())));
  push_u32be(out, crc);
}

inline std::vector<unsigned char> zlib_deflate(const std::vector<unsigned char>& raw) {
  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> out(bound);
  if (::compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    fail(errc::numerical_failure, "zlib compression failed");
  out.resize(bound);
  return out;
}

inline void write_png(const std::string& path, std::size_t width, std::size_t height, int bit_depth,
                      int color_type, const std::vector<unsigned char>& scanlines) {
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<unsigned char> out(sig, sig + 8);

  std::vector<unsigned char> ihdr;
  push_u32be(ihdr, static_cast<std::uint32_t>(width));
  push_u32be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(static_cast<unsigned char>(bit_depth));
  ihdr.push_back(static_cast<unsigned char>(color_type));
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  png_chunk(out, "IHDR", ihdr);
  png_chunk(out, "IDAT", zlib_deflate(scanlines));
  png_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(errc::io_error, "cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) fail(errc::io_error, "write failed for '" + path + "'");
}

}  // namespace detail

inline void write_png_gray16(const std::string& path, std::size_t width, std::size_t height,
                             const std::vector<std::uint16_t>& pixels) {
  if (width == 0 || height == 0 || pixels.size() != width * height)
    fail(errc::invalid_size, "pixel buffer does not match image dimensions");
  std::vector<unsigned char> raw;
  raw.reserve(height * (1 + width * 2));
  for (std::size_t y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    for (std::size_t x = 0; x < width; ++x) {
      std::uint16_t v = pixels[y * width + x];
      raw.push_back(static_cast<unsigned char>(v >> 8));
      raw.push_back(static_cast<unsigned char>(v & 0xff));
    }
  }
  detail::write_png(path, width, height, 16, 0, raw);
}

inline void write_png_rgb8(const std::string& path, std::size_t width, std::size_t height,
                           const std::vector<std::array<std::uint8_t, 3>>& pixels) {
  if (width == 0 || height == 0 || pixels.size() != width * height)
    fail(errc::invalid_size, "pixel buffer does not match image dimensions");
  std::vector<unsigned char> raw;
  raw.reserve(height * (1 + width * 3));
  for (std::size_t y = 0; y < height; ++y) {
    raw.push_back(0);
    for (std::size_t x = 0; x < width; ++x) {
      const auto& p = pixels[y * width + x];
      raw.push_back(p[0]);
      raw.push_back(p[1]);
      raw.push_back(p[2]);
    }
  }
  detail::write_png(path, width, height, 8, 2, raw);
}

/// Reads back a 16-bit grayscale PNG (the only format this library writes
/// for data); other depths/color types are rejected.
inline ImageGray16 read_png_gray16(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(errc::io_error, "cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    fail(errc::malformed_header, "'" + path + "' is not a png file");

  ImageGray16 img;
  std::vector<unsigned char> idat;
  bool have_ihdr = false, have_iend = false;
  std::size_t pos = 8;
  while (pos + 8 <= bytes.size() && !have_iend) {
    std::uint32_t len = detail::read_u32be(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) fail(errc::truncated_body, "'" + path + "': truncated chunk");
    const unsigned char* type = bytes.data() + pos + 4;
    const unsigned char* data = bytes.data() + pos + 8;
    std::uint32_t crc = detail::read_u32be(data + len);
    if (crc != static_cast<std::uint32_t>(::crc32(0, type, 4 + len)))
      fail(errc::parse_error, "'" + path + "': chunk crc mismatch");

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail(errc::malformed_header, "'" + path + "': bad IHDR length");
      img.width = detail::read_u32be(data);
      img.height = detail::read_u32be(data + 4);
      int bit_depth = data[8], color_type = data[9];
      if (data[12] != 0) fail(errc::unsupported_format, "'" + path + "': interlaced png not supported");
      if (bit_depth != 16 || color_type != 0)
        fail(errc::unsupported_format, "'" + path + "': only 16-bit grayscale is supported");
      have_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      have_iend = true;
    }
    pos += 12 + len;
  }
  if (!have_ihdr || !have_iend || img.width == 0 || img.height == 0)
    fail(errc::malformed_header, "'" + path + "': missing IHDR or IEND");

  const std::size_t row_bytes = 1 + img.width * 2;
  std::vector<unsigned char> raw(img.height * row_bytes);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (::uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    fail(errc::truncated_body, "'" + path + "': image data does not inflate to the expected size");

  // undo per-row filters (bpp = 2 for gray16)
  const std::size_t bpp = 2;
  const std::size_t stride = img.width * 2;
  std::vector<unsigned char> recon(img.height * stride);
  for (std::size_t y = 0; y < img.height; ++y) {
    int filter = raw[y * row_bytes];
    const unsigned char* src = raw.data() + y * row_bytes + 1;
    unsigned char* cur = recon.data() + y * stride;
    const unsigned char* up = (y > 0) ? recon.data() + (y - 1) * stride : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      int a = (i >= bpp) ? cur[i - bpp] : 0;
      int b = up ? up[i] : 0;
      int c = (up && i >= bpp) ? up[i - bpp] : 0;
      int x = src[i];
      switch (filter) {
        case 0: break;
        case 1: x += a; break;
        case 2: x += b; break;
        case 3: x += (a + b) / 2; break;
        case 4: {
          int pp = a + b - c, pa = std::abs(pp - a), pb = std::abs(pp - b), pc = std::abs(pp - c);
          x += (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
          break;
        }
        default: fail(errc::unsupported_format, "'" + path + "': unknown scanline filter");
      }
      cur[i] = static_cast<unsigned char>(x & 0xff);
    }
  }

  img.pixels.resize(img.width * img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      const unsigned char* p = recon.data() + y * stride + x * 2;
      img.pixels[y * img.width + x] = static_cast<std::uint16_t>((p[0] << 8) | p[1]);
    }
  return img;
}

}  // namespace topomap
