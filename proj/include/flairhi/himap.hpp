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

#ifndef FLAIRHI_HIMAP_HPP
#define FLAIRHI_HIMAP_HPP

#include <vector>

#include "flairhi/volume.hpp"

namespace flairhi {

/// Integer lattice point on an axial slice.
struct GridPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridPoint& a, const GridPoint& b) {
    return a.x == b.x && a.y == b.y;
  }
};

/// Per-slice point sets used as comparison patches for scoring. Points are
/// unique within a slice and always lie inside the brain mask.
struct PointNet {
  std::vector<std::vector<GridPoint>> slices; // indexed by z
  int radius = 10;
  int theta_step_deg = 60;
};

/// Builds the point set of one axial slice: breadth-first expansion from the
/// masked-region centroid using six fixed integer offsets derived from
/// (r, theta), clipped to slice bounds, with off-mask points purged at the
/// end. Returns points in ascending (y, x) order.
std::vector<GridPoint> build_point_net(const BinaryMask& mask, int slice_z,
                                       int r, int theta_step_deg);

/// Runs build_point_net on every slice.
PointNet build_point_net_volume(const BinaryMask& mask, int r,
                                int theta_step_deg);

struct ScoreMapResult {
  Volume3D map;
  /// Set when the masked standard deviation of the input collapses below
  /// tolerance; the map is then all zeros.
  bool degenerate = false;
  double sigma = 0.0;
};

/// Hyperintensity score map: for every masked voxel v, the fraction of net
/// points p on v's slice whose patch mean trails v's neighborhood mean by at
/// least one masked standard deviation. Zero outside the mask and on slices
/// with empty nets.
ScoreMapResult score_map(const Volume3D& intermediate, const BinaryMask& mask,
                         const PointNet& net, int neighborhood_radius = 1);

} // namespace flairhi

#endif // FLAIRHI_HIMAP_HPP
