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

#include "flairhi/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace flairhi {

namespace {

void check_dims_positive(const Dims3& dims) {
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
    throw DomainError("volume dimensions must be >= 1, got " +
                      std::to_string(dims[0]) + "x" + std::to_string(dims[1]) +
                      "x" + std::to_string(dims[2]));
}

std::size_t voxel_count(const Dims3& dims) {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
         static_cast<std::size_t>(dims[2]);
}

} // namespace

Volume3D::Volume3D(Dims3 dims, double fill, Spacing3 spacing)
    : dims_(dims), spacing_(spacing) {
  check_dims_positive(dims);
  data_.assign(voxel_count(dims), fill);
}

Volume3D Volume3D::from_data(Dims3 dims, std::vector<double> data, Spacing3 spacing) {
  check_dims_positive(dims);
  if (data.size() != voxel_count(dims))
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match dims product " +
                     std::to_string(voxel_count(dims)));
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!std::isfinite(data[i]))
      throw DomainError("non-finite value at voxel " + std::to_string(i));
  Volume3D v;
  v.dims_ = dims;
  v.spacing_ = spacing;
  v.data_ = std::move(data);
  return v;
}

BinaryMask::BinaryMask(Dims3 dims, bool fill) : dims_(dims) {
  check_dims_positive(dims);
  bits_.assign(voxel_count(dims), fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
  std::size_t n = 0;
  for (auto b : bits_)
    n += b != 0;
  return n;
}

void require_same_dims(const Dims3& a, const Dims3& b, const char* what) {
  if (a != b)
    throw ShapeError(std::string(what) + ": dims " + std::to_string(a[0]) + "x" +
                     std::to_string(a[1]) + "x" + std::to_string(a[2]) +
                     " vs " + std::to_string(b[0]) + "x" + std::to_string(b[1]) +
                     "x" + std::to_string(b[2]));
}

MaskedStats masked_stats(const Volume3D& vol, const BinaryMask& mask) {
  require_same_dims(vol.dims(), mask.dims(), "masked_stats");
  const auto& data = vol.data();
  const auto& bits = mask.bits();

  // Two-pass: mean, then centered second moment.
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (bits[i]) {
      sum += data[i];
      ++n;
    }
  }
  if (n == 0)
    throw DomainError("masked_stats: empty mask");
  const double mean = sum / static_cast<double>(n);

  double ss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (bits[i]) {
      const double d = data[i] - mean;
      ss += d * d;
    }
  }
  MaskedStats out;
  out.mean = mean;
  out.std = std::sqrt(ss / static_cast<double>(n));
  out.count = n;
  return out;
}

std::optional<double> masked_cube_mean(const Volume3D& vol, const BinaryMask& mask,
                                       int cx, int cy, int cz, int radius) {
  const int x0 = std::max(0, cx - radius), x1 = std::min(vol.nx() - 1, cx + radius);
  const int y0 = std::max(0, cy - radius), y1 = std::min(vol.ny() - 1, cy + radius);
  const int z0 = std::max(0, cz - radius), z1 = std::min(vol.nz() - 1, cz + radius);
  double sum = 0.0;
  std::size_t n = 0;
  for (int z = z0; z <= z1; ++z)
    for (int y = y0; y <= y1; ++y) {
      const std::size_t row = vol.index(0, y, z);
      for (int x = x0; x <= x1; ++x) {
        const std::size_t i = row + static_cast<std::size_t>(x);
        if (mask.bits()[i]) {
          sum += vol.data()[i];
          ++n;
        }
      }
    }
  if (n == 0)
    return std::nullopt;
  return sum / static_cast<double>(n);
}

double neighborhood_mean(const Volume3D& vol, int cx, int cy, int cz,
                         int radius, const BinaryMask& mask) {
  require_same_dims(vol.dims(), mask.dims(), "neighborhood_mean");
  if (radius < 0)
    throw DomainError("neighborhood_mean: radius must be >= 0");
  if (cx < 0 || cy < 0 || cz < 0 || cx >= vol.nx() || cy >= vol.ny() || cz >= vol.nz())
    throw DomainError("neighborhood_mean: center outside volume");
  auto m = masked_cube_mean(vol, mask, cx, cy, cz, radius);
  if (!m)
    throw DomainError("neighborhood_mean: no contributing voxels");
  return *m;
}

Volume3D rescale_unit(const Volume3D& vol, const BinaryMask& mask) {
  require_same_dims(vol.dims(), mask.dims(), "rescale_unit");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const auto& data = vol.data();
  const auto& bits = mask.bits();
  bool any = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (bits[i]) {
      lo = std::min(lo, data[i]);
      hi = std::max(hi, data[i]);
      any = true;
    }
  }
  if (!any)
    throw DomainError("rescale_unit: empty mask");
  if (!(hi > lo))
    throw DomainError("rescale_unit: degenerate masked range (min == max)");

  Volume3D out(vol.dims(), 0.0, vol.spacing());
  const double scale = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (bits[i])
      out[i] = (data[i] - lo) * scale;
  return out;
}

} // namespace flairhi
