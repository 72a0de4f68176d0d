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

#include "flairhi/himap.hpp"

#include <cmath>
#include <deque>
#include <numbers>
#include <string>

#include "flairhi/errors.hpp"
#include "flairhi/parallel.hpp"

namespace flairhi {

namespace {

constexpr double kSigmaTolerance = 1e-9;

/// The six (or 360/step) displacement vectors, rounded to the lattice once so
/// that the generation rule is identical at every point.
std::vector<GridPoint> net_offsets(int r, int theta_step_deg) {
  if (r < 1)
    throw DomainError("build_point_net: r must be >= 1");
  if (theta_step_deg < 1 || 360 % theta_step_deg != 0)
    throw DomainError("build_point_net: theta step must divide 360");
  std::vector<GridPoint> offsets;
  offsets.reserve(static_cast<std::size_t>(360 / theta_step_deg));
  for (int deg = 0; deg < 360; deg += theta_step_deg) {
    const double rad = static_cast<double>(deg) * std::numbers::pi / 180.0;
    offsets.push_back(
        {static_cast<int>(std::lround(static_cast<double>(r) * std::cos(rad))),
         static_cast<int>(std::lround(static_cast<double>(r) * std::sin(rad)))});
  }
  return offsets;
}

} // namespace

std::vector<GridPoint> build_point_net(const BinaryMask& mask, int slice_z,
                                       int r, int theta_step_deg) {
  const std::vector<GridPoint> offsets = net_offsets(r, theta_step_deg);
  if (slice_z < 0 || slice_z >= mask.nz())
    throw DomainError("build_point_net: slice " + std::to_string(slice_z) +
                      " out of range");
  const int nx = mask.nx(), ny = mask.ny();

  // Masked-region centroid of the slice, then the nearest masked voxel as
  // the seed (first in scan order on ties).
  double sum_x = 0.0, sum_y = 0.0;
  std::int64_t count = 0;
  for (int y = 0; y < ny; ++y) {
    const std::size_t row = mask.index(0, y, slice_z);
    for (int x = 0; x < nx; ++x)
      if (mask.bits()[row + static_cast<std::size_t>(x)]) {
        sum_x += x;
        sum_y += y;
        ++count;
      }
  }
  if (count == 0)
    return {};
  const double cx = sum_x / static_cast<double>(count);
  const double cy = sum_y / static_cast<double>(count);
  GridPoint seed{-1, -1};
  double best = 0.0;
  for (int y = 0; y < ny; ++y) {
    const std::size_t row = mask.index(0, y, slice_z);
    for (int x = 0; x < nx; ++x) {
      if (!mask.bits()[row + static_cast<std::size_t>(x)])
        continue;
      const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      if (seed.x < 0 || d2 < best) {
        best = d2;
        seed = {x, y};
      }
    }
  }

  // Breadth-first closure over the slice lattice; the mask only matters for
  // the final purge.
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(nx) * ny, 0);
  std::deque<GridPoint> frontier;
  visited[static_cast<std::size_t>(seed.y) * nx + seed.x] = 1;
  frontier.push_back(seed);
  while (!frontier.empty()) {
    const GridPoint p = frontier.front();
    frontier.pop_front();
    for (const GridPoint& off : offsets) {
      const int qx = p.x + off.x;
      const int qy = p.y + off.y;
      if (qx < 0 || qx >= nx || qy < 0 || qy >= ny)
        continue;
      std::uint8_t& seen = visited[static_cast<std::size_t>(qy) * nx + qx];
      if (!seen) {
        seen = 1;
        frontier.push_back({qx, qy});
      }
    }
  }

  std::vector<GridPoint> net;
  for (int y = 0; y < ny; ++y) {
    const std::size_t row = mask.index(0, y, slice_z);
    for (int x = 0; x < nx; ++x)
      if (visited[static_cast<std::size_t>(y) * nx + x] &&
          mask.bits()[row + static_cast<std::size_t>(x)])
        net.push_back({x, y});
  }
  return net;
}

PointNet build_point_net_volume(const BinaryMask& mask, int r,
                                int theta_step_deg) {
  PointNet net;
  net.radius = r;
  net.theta_step_deg = theta_step_deg;
  net.slices.resize(static_cast<std::size_t>(mask.nz()));
  for (int z = 0; z < mask.nz(); ++z)
    net.slices[static_cast<std::size_t>(z)] =
        build_point_net(mask, z, r, theta_step_deg);
  return net;
}

ScoreMapResult score_map(const Volume3D& intermediate, const BinaryMask& mask,
                         const PointNet& net, int neighborhood_radius) {
  require_same_dims(intermediate.dims(), mask.dims(), "score_map");
  if (net.slices.size() != static_cast<std::size_t>(intermediate.nz()))
    throw ShapeError("score_map: net has " + std::to_string(net.slices.size()) +
                     " slices, volume has " + std::to_string(intermediate.nz()));
  if (neighborhood_radius < 0)
    throw DomainError("score_map: neighborhood_radius must be >= 0");

  ScoreMapResult result{Volume3D(intermediate.dims(), 0.0, intermediate.spacing()),
                        false, 0.0};
  if (mask.count() == 0) {
    result.degenerate = true;
    return result;
  }
  const MaskedStats stats = masked_stats(intermediate, mask);
  result.sigma = stats.std;
  if (stats.std < kSigmaTolerance) {
    result.degenerate = true;
    return result;
  }
  const double sigma = stats.std;
  const int r = neighborhood_radius;

  parallel_chunks(intermediate.nz(), [&](std::int64_t zb, std::int64_t ze) {
    for (std::int64_t z = zb; z < ze; ++z) {
      const auto& points = net.slices[static_cast<std::size_t>(z)];
      if (points.empty())
        continue;
      std::vector<double> patch_mean(points.size());
      for (std::size_t p = 0; p < points.size(); ++p)
        patch_mean[p] = neighborhood_mean(intermediate, points[p].x, points[p].y,
                                          static_cast<int>(z), r, mask);
      const double inv_card = 1.0 / static_cast<double>(points.size());
      for (int y = 0; y < intermediate.ny(); ++y) {
        const std::size_t row = intermediate.index(0, y, static_cast<int>(z));
        for (int x = 0; x < intermediate.nx(); ++x) {
          const std::size_t i = row + static_cast<std::size_t>(x);
          if (!mask.bits()[i])
            continue;
          const double mu_v =
              neighborhood_mean(intermediate, x, y, static_cast<int>(z), r, mask);
          int hits = 0;
          for (const double mu_p : patch_mean)
            if (mu_v - mu_p >= sigma)
              ++hits;
          result.map[i] = static_cast<double>(hits) * inv_card;
        }
      }
    }
  });
  return result;
}

} // namespace flairhi
