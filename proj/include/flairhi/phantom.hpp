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

#ifndef FLAIRHI_PHANTOM_HPP
#define FLAIRHI_PHANTOM_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "flairhi/volume.hpp"

namespace flairhi {

/// Synthetic brain description: nested ellipsoids (CSF rim, GM shell, WM
/// core) with hyperintense spherical lesions carved into the WM core.
struct PhantomSpec {
  Dims3 dims{64, 64, 48};
  std::array<double, 3> brain_axes{28.0, 28.0, 20.0};
  double wm_rho = 0.75; // normalized elliptic radius of the WM core
  double gm_rho = 0.95; // outer edge of the GM shell; CSF fills up to 1
  double csf_tier = 100.0;
  double gm_tier = 480.0;
  double wm_tier = 400.0;

  struct Lesion {
    std::array<double, 3> center{0.0, 0.0, 0.0};
    double radius = 3.0;
    double intensity = 500.0;
  };
  std::vector<Lesion> lesions;

  double noise_sigma = 15.0;
  std::uint64_t seed = 42;
  double atlas_width = 2.0; // sigmoid falloff of the atlases, in voxels

  /// 64x64x48 phantom with three lesions 25% brighter than white matter;
  /// runs through the full pipeline in seconds.
  static PhantomSpec desk_default();
  /// 181x217x181 preset for benchmarks.
  static PhantomSpec full_scale();

  static PhantomSpec from_json(const std::string& text);
  static PhantomSpec from_json_file(const std::string& path);
  std::string to_json() const;

  void validate() const;
};

struct Phantom {
  Volume3D flair;
  BinaryMask brain_mask;
  BinaryMask wm_truth;
  BinaryMask gm_truth;
  BinaryMask csf_truth;
  BinaryMask lesion_truth;
  Volume3D wm_atlas;
  Volume3D gm_atlas;
};

/// Deterministic generation: identical spec (including seed) gives
/// bit-identical outputs. Atlases are sigmoid-smoothed distance maps of the
/// WM (including lesion territory) and GM truths, valued in [0,1].
Phantom generate_phantom(const PhantomSpec& spec);

/// Signed 3-4-5 chamfer distance to the mask boundary in voxel units,
/// negative inside the mask, positive outside.
Volume3D signed_distance(const BinaryMask& mask);

/// Writes the phantom as NIfTI files into out_dir (flair.nii, brain_mask.nii,
/// wm_truth.nii, gm_truth.nii, csf_truth.nii, lesion_truth.nii, wm_atlas.nii,
/// gm_atlas.nii) plus the generating spec as phantom_spec.json.
void write_phantom(const Phantom& phantom, const PhantomSpec& spec,
                   const std::string& out_dir);

} // namespace flairhi

#endif // FLAIRHI_PHANTOM_HPP
