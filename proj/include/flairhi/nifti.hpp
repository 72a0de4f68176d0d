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

#ifndef FLAIRHI_NIFTI_HPP
#define FLAIRHI_NIFTI_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "flairhi/volume.hpp"

namespace flairhi {
namespace nifti {

/// Subset of the NIfTI-1 datatypes this toolkit reads; masks are written as
/// Uint8 and images as Float32.
enum class Datatype : std::int16_t {
  Uint8 = 2,
  Int16 = 4,
  Float32 = 16,
  Float64 = 64,
};

/// Orientation fields carried verbatim from a source header to the files we
/// write. Never used for resampling; grid alignment is an input contract.
struct Orientation {
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  float quatern[3] = {0.f, 0.f, 0.f};   // quatern_b, _c, _d
  float qoffset[3] = {0.f, 0.f, 0.f};
  float srow[12] = {0.f};               // srow_x, srow_y, srow_z
  float qfac = 1.f;                     // pixdim[0]
};

/// Reads a NIfTI-1 single file (.nii, or gzip-wrapped .nii.gz detected by
/// magic bytes). scl_slope/scl_inter are applied when slope is nonzero.
/// Rejects non-finite payload values. Throws FormatError (with byte offset)
/// or IoError.
Volume3D read_volume(const std::filesystem::path& path,
                     Orientation* orientation = nullptr);

/// As read_volume, then thresholds values at 0.5 into bits.
BinaryMask read_mask(const std::filesystem::path& path,
                     Orientation* orientation = nullptr);

/// Writes an uncompressed NIfTI-1 single file. Float32 payloads round-trip
/// through read_volume bit-exactly. Values are cast to the requested type.
void write_volume(const Volume3D& vol, const std::filesystem::path& path,
                  Datatype datatype = Datatype::Float32,
                  const Orientation* orientation = nullptr);

/// Writes a mask as datatype uint8 with values {0,1}.
void write_mask(const BinaryMask& mask, const std::filesystem::path& path,
                const Orientation* orientation = nullptr,
                Spacing3 spacing = {1.0, 1.0, 1.0});

} // namespace nifti
} // namespace flairhi

#endif
