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

#ifndef FLAIRHI_VOLUME_HPP
#define FLAIRHI_VOLUME_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "flairhi/errors.hpp"

namespace flairhi {

using Dims3 = std::array<int, 3>;    // (nx, ny, nz)
using Spacing3 = std::array<double, 3>; // millimetres

/// Scalar 3D grid stored row-major with x fastest:
/// index(x,y,z) = x + nx*(y + ny*z).
///
/// Values are expected to stay finite. Construction from external data
/// (from_data, the NIfTI reader) enforces this; in-memory operations keep it
/// by producing finite outputs from finite inputs.
class Volume3D {
public:
  Volume3D() : dims_{0, 0, 0}, spacing_{1.0, 1.0, 1.0} {}

  Volume3D(Dims3 dims, double fill = 0.0, Spacing3 spacing = {1.0, 1.0, 1.0});

  /// Takes ownership of data; validates length and finiteness.
  static Volume3D from_data(Dims3 dims, std::vector<double> data,
                            Spacing3 spacing = {1.0, 1.0, 1.0});

  const Dims3& dims() const { return dims_; }
  const Spacing3& spacing() const { return spacing_; }
  void set_spacing(const Spacing3& s) { spacing_ = s; }

  int nx() const { return dims_[0]; }
  int ny() const { return dims_[1]; }
  int nz() const { return dims_[2]; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(z));
  }

  double operator()(int x, int y, int z) const { return data_[index(x, y, z)]; }
  double& operator()(int x, int y, int z) { return data_[index(x, y, z)]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_grid(const Dims3& other) const { return dims_ == other; }

private:
  Dims3 dims_;
  Spacing3 spacing_;
  std::vector<double> data_;
};

/// One bit per voxel, aligned to the Volume3D grid it annotates.
class BinaryMask {
public:
  BinaryMask() : dims_{0, 0, 0} {}
  explicit BinaryMask(Dims3 dims, bool fill = false);

  const Dims3& dims() const { return dims_; }
  int nx() const { return dims_[0]; }
  int ny() const { return dims_[1]; }
  int nz() const { return dims_[2]; }
  std::size_t size() const { return bits_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(z));
  }

  bool get(int x, int y, int z) const { return bits_[index(x, y, z)] != 0; }
  void set(int x, int y, int z, bool v) { bits_[index(x, y, z)] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set_flat(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::vector<std::uint8_t>& bits() { return bits_; }

  /// Number of set voxels.
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  bool operator==(const BinaryMask& other) const {
    return dims_ == other.dims_ && bits_ == other.bits_;
  }

private:
  Dims3 dims_;
  std::vector<std::uint8_t> bits_;
};

/// Mean and population standard deviation over a masked region.
struct MaskedStats {
  double mean = 0.0;
  double std = 0.0; // population (divide by count)
  std::size_t count = 0;
};

/// Mean and population std over exactly the set voxels of mask.
/// Throws ShapeError on dim mismatch, DomainError on an empty mask.
MaskedStats masked_stats(const Volume3D& vol, const BinaryMask& mask);

/// Mean over the (2r+1)^3 cube around center, clipped to the volume bounds
/// and to the mask. Throws DomainError when no voxel contributes.
double neighborhood_mean(const Volume3D& vol, int cx, int cy, int cz,
                         int radius, const BinaryMask& mask);

/// Non-throwing variant used by the per-voxel kernels: empty neighborhoods
/// yield nullopt.
std::optional<double> masked_cube_mean(const Volume3D& vol, const BinaryMask& mask,
                                       int cx, int cy, int cz, int radius);

/// Affine map sending the masked minimum to 0 and maximum to 1; voxels
/// outside the mask are set to 0. Throws DomainError when the masked range
/// is degenerate.
Volume3D rescale_unit(const Volume3D& vol, const BinaryMask& mask);

/// Throws ShapeError unless dims match. `what` names the offending pair.
void require_same_dims(const Dims3& a, const Dims3& b, const char* what);

} // namespace flairhi

#endif
