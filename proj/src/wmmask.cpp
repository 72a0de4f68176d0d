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

#include "flairhi/wmmask.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "flairhi/errors.hpp"
#include "flairhi/parallel.hpp"

namespace flairhi {

LabelVolume::LabelVolume(const Dims3& d, int k)
    : dims(d),
      labels(static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) *
                 static_cast<std::size_t>(d[2]),
             0),
      num_clusters(k) {}

BinaryMask LabelVolume::label_mask(int label) const {
  BinaryMask out(dims);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label)
      out.bits()[i] = 1;
  return out;
}

namespace {

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform
/// for a given generator state.
double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double sq_distance(const double* a, const double* b, int dim) {
  double d2 = 0.0;
  for (int c = 0; c < dim; ++c) {
    const double d = a[c] - b[c];
    d2 += d * d;
  }
  return d2;
}

} // namespace

LabelVolume initial_segmentation(const std::vector<Volume3D>& channels,
                                 const BinaryMask& mask, int k,
                                 std::uint64_t seed) {
  if (channels.empty())
    throw DomainError("initial_segmentation: need at least one channel");
  if (k < 2)
    throw DomainError("initial_segmentation: k must be >= 2");
  for (const Volume3D& c : channels)
    require_same_dims(c.dims(), mask.dims(), "initial_segmentation");

  std::vector<std::size_t> voxels;
  for (std::size_t i = 0; i < mask.bits().size(); ++i)
    if (mask.bits()[i])
      voxels.push_back(i);
  const std::size_t n = voxels.size();
  if (n < static_cast<std::size_t>(k))
    throw DomainError("initial_segmentation: " + std::to_string(n) +
                      " masked voxels for k=" + std::to_string(k));

  const int dim = static_cast<int>(channels.size());
  std::vector<double> points(n * static_cast<std::size_t>(dim));
  for (std::size_t p = 0; p < n; ++p)
    for (int c = 0; c < dim; ++c)
      points[p * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] =
          channels[static_cast<std::size_t>(c)][voxels[p]];

  // k-means++ seeding.
  std::mt19937_64 gen(seed);
  std::vector<double> centers(static_cast<std::size_t>(k) *
                              static_cast<std::size_t>(dim));
  std::vector<double> min_d2(n, std::numeric_limits<double>::max());
  {
    std::size_t first = static_cast<std::size_t>(uniform01(gen) *
                                                 static_cast<double>(n));
    first = std::min(first, n - 1);
    std::copy_n(points.data() + first * static_cast<std::size_t>(dim), dim,
                centers.data());
  }
  for (int c = 1; c < k; ++c) {
    const double* prev =
        centers.data() + static_cast<std::size_t>(c - 1) * dim;
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double d2 =
          sq_distance(points.data() + p * static_cast<std::size_t>(dim), prev, dim);
      min_d2[p] = std::min(min_d2[p], d2);
      total += min_d2[p];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform01(gen) * total;
      double run = 0.0;
      pick = n - 1;
      for (std::size_t p = 0; p < n; ++p) {
        run += min_d2[p];
        if (run >= target) {
          pick = p;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(uniform01(gen) * static_cast<double>(n));
      pick = std::min(pick, n - 1);
    }
    std::copy_n(points.data() + pick * static_cast<std::size_t>(dim), dim,
                centers.data() + static_cast<std::size_t>(c) * dim);
  }

  // Lloyd iterations: parallel assignment, sequential centroid update so the
  // result does not depend on the worker count.
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    std::atomic<bool> changed{false};
    parallel_chunks(static_cast<std::int64_t>(n),
                    [&](std::int64_t begin, std::int64_t end) {
                      bool local = false;
                      for (std::int64_t p = begin; p < end; ++p) {
                        const double* pt =
                            points.data() +
                            static_cast<std::size_t>(p) * static_cast<std::size_t>(dim);
                        int best = 0;
                        double best_d2 = sq_distance(pt, centers.data(), dim);
                        for (int c = 1; c < k; ++c) {
                          const double d2 = sq_distance(
                              pt, centers.data() + static_cast<std::size_t>(c) * dim,
                              dim);
                          if (d2 < best_d2) {
                            best_d2 = d2;
                            best = c;
                          }
                        }
                        if (assign[static_cast<std::size_t>(p)] != best) {
                          assign[static_cast<std::size_t>(p)] = best;
                          local = true;
                        }
                      }
                      if (local)
                        changed.store(true, std::memory_order_relaxed);
                    });
    if (!changed.load())
      break;
    std::vector<double> sums(static_cast<std::size_t>(k) *
                                 static_cast<std::size_t>(dim),
                             0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto c = static_cast<std::size_t>(assign[p]);
      ++counts[c];
      for (int ch = 0; ch < dim; ++ch)
        sums[c * static_cast<std::size_t>(dim) + static_cast<std::size_t>(ch)] +=
            points[p * static_cast<std::size_t>(dim) + static_cast<std::size_t>(ch)];
    }
    for (int c = 0; c < k; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      if (counts[uc] == 0)
        continue; // empty cluster keeps its previous centroid
      for (int ch = 0; ch < dim; ++ch)
        centers[uc * static_cast<std::size_t>(dim) + static_cast<std::size_t>(ch)] =
            sums[uc * static_cast<std::size_t>(dim) + static_cast<std::size_t>(ch)] /
            static_cast<double>(counts[uc]);
    }
  }

  LabelVolume out(mask.dims(), k);
  for (std::size_t p = 0; p < n; ++p)
    out.labels[voxels[p]] = static_cast<std::uint8_t>(assign[p] + 1);
  return out;
}

BinaryMask select_cluster_by_atlas(const LabelVolume& labels,
                                   const Volume3D& atlas) {
  require_same_dims(labels.dims, atlas.dims(), "select_cluster_by_atlas");
  if (labels.num_clusters < 1)
    throw DomainError("select_cluster_by_atlas: no clusters");
  std::vector<double> sums(static_cast<std::size_t>(labels.num_clusters) + 1, 0.0);
  std::vector<std::size_t> counts(sums.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int lbl = labels.labels[i];
    if (lbl == 0)
      continue;
    sums[static_cast<std::size_t>(lbl)] += atlas[i];
    ++counts[static_cast<std::size_t>(lbl)];
  }
  int best = -1;
  double best_mean = 0.0;
  for (int lbl = 1; lbl <= labels.num_clusters; ++lbl) {
    const auto ul = static_cast<std::size_t>(lbl);
    if (counts[ul] == 0)
      continue;
    const double mean = sums[ul] / static_cast<double>(counts[ul]);
    if (best < 0 || mean > best_mean) {
      best = lbl;
      best_mean = mean;
    }
  }
  if (best < 0)
    throw DomainError("select_cluster_by_atlas: all labels empty");
  return labels.label_mask(best);
}

BinaryMask estimate_wm(const BinaryMask& wm_initial, const Volume3D& hi_map,
                       const Volume3D& wm_atlas, const WmEstimationConfig& cfg,
                       const BinaryMask& mask) {
  require_same_dims(wm_initial.dims(), hi_map.dims(), "estimate_wm");
  require_same_dims(wm_initial.dims(), wm_atlas.dims(), "estimate_wm");
  require_same_dims(wm_initial.dims(), mask.dims(), "estimate_wm");
  if (!(cfg.k_sigma >= 0.0))
    throw DomainError("estimate_wm: k_sigma must be >= 0");
  if (cfg.neighborhood_radius < 0)
    throw DomainError("estimate_wm: neighborhood_radius must be >= 0");

  const MaskedStats hi_stats = masked_stats(hi_map, wm_initial);
  const MaskedStats prob_stats = masked_stats(wm_atlas, wm_initial);
  const double t_hi = hi_stats.mean + cfg.k_sigma * hi_stats.std;
  const double t_prob = prob_stats.mean;
  const int r = cfg.neighborhood_radius;

  BinaryMask result = wm_initial;
  bool grew = true;
  while (grew) {
    grew = false;
    BinaryMask next = result;
    std::atomic<bool> added{false};
    parallel_chunks(static_cast<std::int64_t>(mask.nz()),
                    [&](std::int64_t zb, std::int64_t ze) {
                      bool local = false;
                      for (std::int64_t z = zb; z < ze; ++z)
                        for (int y = 0; y < mask.ny(); ++y) {
                          const std::size_t row =
                              mask.index(0, y, static_cast<int>(z));
                          for (int x = 0; x < mask.nx(); ++x) {
                            const std::size_t i = row + static_cast<std::size_t>(x);
                            if (!mask.bits()[i] || result.bits()[i])
                              continue;
                            const double m_hi = neighborhood_mean(
                                hi_map, x, y, static_cast<int>(z), r, mask);
                            if (!(m_hi > t_hi))
                              continue;
                            const double m_prob = neighborhood_mean(
                                wm_atlas, x, y, static_cast<int>(z), r, mask);
                            if (!(m_prob > t_prob))
                              continue;
                            next.bits()[i] = 1;
                            local = true;
                          }
                        }
                      if (local)
                        added.store(true, std::memory_order_relaxed);
                    });
    result = std::move(next);
    grew = cfg.iterate_to_fixpoint && added.load();
  }
  return result;
}

BinaryMask merge_wm_ground_truth(const BinaryMask& wm_initial,
                                 const BinaryMask& lesion_gt) {
  require_same_dims(wm_initial.dims(), lesion_gt.dims(), "merge_wm_ground_truth");
  BinaryMask out = wm_initial;
  for (std::size_t i = 0; i < out.bits().size(); ++i)
    if (lesion_gt.bits()[i])
      out.bits()[i] = 1;
  return out;
}

BinaryMask pure_cluster(const BinaryMask& cluster, const BinaryMask& lesion_gt) {
  require_same_dims(cluster.dims(), lesion_gt.dims(), "pure_cluster");
  BinaryMask out = cluster;
  for (std::size_t i = 0; i < out.bits().size(); ++i)
    if (lesion_gt.bits()[i])
      out.bits()[i] = 0;
  return out;
}

} // namespace flairhi
