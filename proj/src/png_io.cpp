/*
 * flairhi - FLAIR hyperintensity enhancement toolkit
 *
 * Copyright 2026 the flairhi authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "flairhi/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include <zlib.h>

#include "flairhi/errors.hpp"

namespace flairhi {

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::vector<std::uint8_t>& payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), out.data() + crc_start,
                          static_cast<uInt>(out.size() - crc_start));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

} // namespace

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
  if (width < 1 || height < 1)
    throw DomainError("write_png_rgb8: empty image");
  const std::size_t expected =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (rgb.size() != expected)
    throw DomainError("write_png_rgb8: buffer has " + std::to_string(rgb.size()) +
                      " bytes, expected " + std::to_string(expected));

  // Raw scanlines, each preceded by filter byte 0.
  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  std::vector<std::uint8_t> raw((stride + 1) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
    row[0] = 0;
    std::memcpy(row + 1, rgb.data() + static_cast<std::size_t>(y) * stride, stride);
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  const int rc = compress2(compressed.data(), &bound, raw.data(),
                           static_cast<uLong>(raw.size()), Z_DEFAULT_COMPRESSION);
  if (rc != Z_OK)
    throw IoError("write_png_rgb8: deflate failed with code " +
                  std::to_string(rc));
  compressed.resize(bound);

  std::vector<std::uint8_t> out;
  static const std::uint8_t signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  out.insert(out.end(), signature, signature + 8);

  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(width));
  put_be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", {});

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f)
    throw IoError("write_png_rgb8: cannot open " + path);
  const std::size_t written = std::fwrite(out.data(), 1, out.size(), f);
  const int close_rc = std::fclose(f);
  if (written != out.size() || close_rc != 0)
    throw IoError("write_png_rgb8: short write to " + path);
}

void render_overlay(const Volume3D& image, const BinaryMask& mask, int slice_z,
                    const std::string& path) {
  require_same_dims(image.dims(), mask.dims(), "render_overlay");
  if (slice_z < 0 || slice_z >= image.nz())
    throw DomainError("render_overlay: slice " + std::to_string(slice_z) +
                      " out of range [0, " + std::to_string(image.nz()) + ")");
  const int nx = image.nx(), ny = image.ny();

  double lo = image(0, 0, slice_z), hi = lo;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const double v = image(x, y, slice_z);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;

  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(nx) *
                                static_cast<std::size_t>(ny) * 3);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const auto px = (static_cast<std::size_t>(y) * nx +
                       static_cast<std::size_t>(x)) * 3;
      const auto g = static_cast<std::uint8_t>(
          std::lround((image(x, y, slice_z) - lo) * scale));
      std::uint8_t r = g, gg = g, b = g;
      if (mask.get(x, y, slice_z)) {
        const bool boundary =
            x == 0 || !mask.get(x - 1, y, slice_z) || x == nx - 1 ||
            !mask.get(x + 1, y, slice_z) || y == 0 ||
            !mask.get(x, y - 1, slice_z) || y == ny - 1 ||
            !mask.get(x, y + 1, slice_z);
        if (boundary) {
          r = 255;
          gg = 0;
          b = 0;
        }
      }
      rgb[px] = r;
      rgb[px + 1] = gg;
      rgb[px + 2] = b;
    }
  write_png_rgb8(path, nx, ny, rgb);
}

} // namespace flairhi
