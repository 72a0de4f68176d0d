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

#ifndef FLAIRHI_PREPROCESS_HPP
#define FLAIRHI_PREPROCESS_HPP

#include <utility>
#include <vector>

#include "flairhi/volume.hpp"

namespace flairhi {

/// Non-local means parameters, in input intensity units.
struct NlmParams {
  double sigma = 15.0;   // assumed noise level
  int patch_radius = 1;  // 3^3 patches
  int search_radius = 5; // 11^3 search window
  double filter_h = 15.0;

  void validate() const;
};

/// Non-local means denoising restricted to the mask.
///
/// Every masked voxel becomes a convex combination of the masked voxels in
/// its search window, weighted by exp(-max(d2 - 2*sigma^2, 0) / h^2) where d2
/// is the mean squared patch difference (patches clipped to the volume
/// bounds). Voxels outside the mask pass through unchanged. Constant inputs
/// are preserved bit-exactly.
Volume3D nlm_denoise(const Volume3D& vol, const BinaryMask& mask,
                     const NlmParams& params);

/// Divides by mu + 3*sigma of the masked region and zeroes voxels outside
/// the mask. Throws DomainError when mu + 3*sigma <= 0.
Volume3D normalize_intensity(const Volume3D& vol, const BinaryMask& mask);

/// Euclidean magnitude of the three 3x3x3 Sobel directional responses.
/// Borders use replicated-edge support. Requires each dim >= 3.
Volume3D sobel_magnitude(const Volume3D& vol);

/// Binned gradient-vs-intensity tables backing the intermediate image.
///
/// h averages, per intensity bin, the empirical CDF of gradient magnitudes;
/// q is its cumulative sum and q_rescaled is q divided by its last entry, so
/// the remapped image lands in [0,1].
struct IntensityHistogram {
  int bin_count = 0;
  std::vector<double> bin_edges; // bin_count + 1 edges over the masked range
  std::vector<double> h;
  std::vector<double> q;
  std::vector<double> q_rescaled;
};

/// Equal-width bin index over [lo, hi]; values clamp into [0, bins-1].
int histogram_bin(double value, double lo, double hi, int bins);

/// Remaps masked intensities through the gradient-weighted cumulative table.
///
/// Masked intensities and masked gradient magnitudes are each quantized into
/// bin_count equal-width bins over their masked ranges. A voxel's gradient
/// CDF value is the fraction of masked voxels whose gradient bin does not
/// exceed its own. h(i) averages that CDF over intensity bin i (empty bins
/// contribute 0), q accumulates h, and each masked voxel maps to q_rescaled
/// at its intensity bin; voxels outside the mask map to 0.
std::pair<Volume3D, IntensityHistogram>
build_intermediate(const Volume3D& flair_norm, const Volume3D& sobel,
                   const BinaryMask& mask, int bin_count);

} // namespace flairhi

#endif
