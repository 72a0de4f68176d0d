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

#ifndef FLAIRHI_PNG_IO_HPP
#define FLAIRHI_PNG_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "flairhi/volume.hpp"

namespace flairhi {

/// Writes an 8-bit RGB PNG; rgb holds width*height*3 bytes, rows top-down.
/// Output bytes are deterministic for fixed input.
void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);

/// Renders one axial slice as grayscale (min-max windowed over the slice)
/// with the mask boundary painted red. A boundary voxel is a mask voxel with
/// a 4-neighbor that is unset or outside the slice.
void render_overlay(const Volume3D& image, const BinaryMask& mask, int slice_z,
                    const std::string& path);

} // namespace flairhi

#endif // FLAIRHI_PNG_IO_HPP
