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

#ifndef FLAIRHI_WMMASK_HPP
#define FLAIRHI_WMMASK_HPP

#include <cstdint>
#include <vector>

#include "flairhi/volume.hpp"

namespace flairhi {

/// Per-voxel tissue labels: 0 = background, 1..num_clusters inside the mask.
struct LabelVolume {
  Dims3 dims{0, 0, 0};
  std::vector<std::uint8_t> labels;
  int num_clusters = 0;

  LabelVolume() = default;
  LabelVolume(const Dims3& d, int k);

  int nx() const { return dims[0]; }
  int ny() const { return dims[1]; }
  int nz() const { return dims[2]; }
  std::size_t size() const { return labels.size(); }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
  }

  /// Mask of all voxels carrying the given label.
  BinaryMask label_mask(int label) const;
};

struct WmEstimationConfig {
  double k_sigma = 3.0;
  int neighborhood_radius = 1;
  bool iterate_to_fixpoint = false;
};

/// k-means over per-voxel channel vectors of masked voxels. Deterministic for
/// a fixed seed: k-means++ initialization from a seeded generator, ties broken
/// by the lowest cluster index, centroid updates in voxel scan order.
LabelVolume initial_segmentation(const std::vector<Volume3D>& channels,
                                 const BinaryMask& mask, int k,
                                 std::uint64_t seed);

/// Returns the mask of the label whose voxels have the highest mean atlas
/// probability (lowest label wins ties).
BinaryMask select_cluster_by_atlas(const LabelVolume& labels,
                                   const Volume3D& atlas);

/// Grows the initial WM mask by admitting masked voxels whose neighborhood
/// means on the hyperintensity map and the atlas clear thresholds frozen from
/// wm_initial's statistics. The result always contains wm_initial.
BinaryMask estimate_wm(const BinaryMask& wm_initial, const Volume3D& hi_map,
                       const Volume3D& wm_atlas, const WmEstimationConfig& cfg,
                       const BinaryMask& mask);

/// Voxelwise union of the initial WM mask and the lesion ground truth.
BinaryMask merge_wm_ground_truth(const BinaryMask& wm_initial,
                                 const BinaryMask& lesion_gt);

/// Removes ground-truth lesion voxels from a tissue cluster.
BinaryMask pure_cluster(const BinaryMask& cluster, const BinaryMask& lesion_gt);

} // namespace flairhi

#endif // FLAIRHI_WMMASK_HPP
