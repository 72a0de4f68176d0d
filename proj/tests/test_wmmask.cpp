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

#include <doctest.h>

#include <array>
#include <random>
#include <set>
#include <vector>

#include "flairhi/wmmask.hpp"

using namespace flairhi;

namespace {

BinaryMask random_mask(Dims3 dims, std::uint64_t seed, double fill = 0.5) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  BinaryMask mask(dims);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.set_flat(i, dist(gen) < fill);
  return mask;
}

/// Three well-separated intensity groups laid out in z-bands, with a small
/// deterministic jitter so no two voxels are identical.
struct Separable {
  Volume3D channel;
  std::array<BinaryMask, 3> groups;
};

Separable separable_volume(Dims3 dims, std::uint64_t seed) {
  Separable s{Volume3D(dims),
              {BinaryMask(dims), BinaryMask(dims), BinaryMask(dims)}};
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  const double levels[3] = {0.1, 0.5, 0.9};
  for (int z = 0; z < dims[2]; ++z) {
    const int band = z * 3 / dims[2];
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        s.channel(x, y, z) = levels[band] + jitter(gen);
        s.groups[static_cast<std::size_t>(band)].set(x, y, z, true);
      }
  }
  return s;
}

} // namespace

TEST_CASE("LabelVolume::label_mask extracts one class") {
  LabelVolume labels({3, 3, 2}, 2);
  labels.labels[0] = 1;
  labels.labels[5] = 2;
  labels.labels[17] = 1;
  const BinaryMask ones = labels.label_mask(1);
  CHECK(ones.count() == 2);
  CHECK(ones[0]);
  CHECK(ones[17]);
  CHECK(labels.label_mask(2).count() == 1);
  CHECK(labels.label_mask(3).count() == 0);
}

TEST_CASE("initial_segmentation recovers separable clusters") {
  const Dims3 dims{10, 10, 9};
  const Separable s = separable_volume(dims, 71);
  const BinaryMask mask(dims, true);

  const LabelVolume labels = initial_segmentation({s.channel}, mask, 3, 42);
  CHECK(labels.num_clusters == 3);

  // Every band maps onto exactly one label and the three labels differ.
  std::set<int> seen;
  for (const BinaryMask& group : s.groups) {
    int label = 0;
    bool pure = true;
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (!group[i])
        continue;
      if (label == 0)
        label = labels.labels[i];
      else if (labels.labels[i] != label)
        pure = false;
    }
    CHECK(pure);
    CHECK(label >= 1);
    CHECK(label <= 3);
    seen.insert(label);
  }
  CHECK(seen.size() == 3);
}

TEST_CASE("initial_segmentation is deterministic and respects the mask") {
  const Dims3 dims{8, 8, 6};
  const Separable s = separable_volume(dims, 72);
  const BinaryMask mask = random_mask(dims, 73, 0.8);

  const LabelVolume a = initial_segmentation({s.channel}, mask, 3, 7);
  const LabelVolume b = initial_segmentation({s.channel}, mask, 3, 7);
  CHECK(a.labels == b.labels);

  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      CHECK(a.labels[i] >= 1);
      CHECK(a.labels[i] <= 3);
    } else {
      CHECK(a.labels[i] == 0);
    }
  }
}

TEST_CASE("initial_segmentation accepts multiple channels") {
  // Two channels whose joint distribution separates what either alone cannot:
  // (0,0) vs (0,1) vs (1,0).
  const Dims3 dims{6, 6, 6};
  Volume3D c1(dims), c2(dims);
  BinaryMask mask(dims, true);
  std::mt19937_64 gen(74);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);
  for (int z = 0; z < 6; ++z)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        const int group = z < 2 ? 0 : (z < 4 ? 1 : 2);
        c1(x, y, z) = (group == 2 ? 1.0 : 0.0) + jitter(gen);
        c2(x, y, z) = (group == 1 ? 1.0 : 0.0) + jitter(gen);
      }
  const LabelVolume labels = initial_segmentation({c1, c2}, mask, 3, 99);
  // Voxels of one z-band share a label.
  const int l0 = labels.labels[labels.index(0, 0, 0)];
  const int l1 = labels.labels[labels.index(0, 0, 2)];
  const int l2 = labels.labels[labels.index(0, 0, 4)];
  CHECK(l0 != l1);
  CHECK(l1 != l2);
  CHECK(l0 != l2);
  for (int z = 0; z < 6; ++z) {
    const int expected = z < 2 ? l0 : (z < 4 ? l1 : l2);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x)
        CHECK(labels.labels[labels.index(x, y, z)] == expected);
  }
}

TEST_CASE("initial_segmentation validation") {
  const Dims3 dims{4, 4, 4};
  const Volume3D vol(dims, 1.0);
  const BinaryMask mask(dims, true);
  CHECK_THROWS_AS(initial_segmentation({}, mask, 2, 1), DomainError);
  CHECK_THROWS_AS(initial_segmentation({vol}, mask, 1, 1), DomainError);
  CHECK_THROWS_AS(initial_segmentation({vol}, BinaryMask(dims), 2, 1),
                  DomainError);
  CHECK_THROWS_AS(initial_segmentation({Volume3D({4, 4, 3}, 0.0)}, mask, 2, 1),
                  ShapeError);
  BinaryMask two(dims);
  two.set(0, 0, 0, true);
  two.set(1, 0, 0, true);
  CHECK_THROWS_AS(initial_segmentation({vol}, two, 3, 1), DomainError);
}

TEST_CASE("select_cluster_by_atlas picks the highest mean, low label on ties") {
  LabelVolume labels({4, 1, 1}, 3);
  labels.labels = {1, 1, 2, 3};
  Volume3D atlas({4, 1, 1});
  atlas[0] = 0.2;
  atlas[1] = 0.4; // label 1 mean 0.3
  atlas[2] = 0.9; // label 2 mean 0.9
  atlas[3] = 0.5; // label 3 mean 0.5
  CHECK(select_cluster_by_atlas(labels, atlas) == labels.label_mask(2));

  atlas[3] = 0.9; // labels 2 and 3 now tie at 0.9
  CHECK(select_cluster_by_atlas(labels, atlas) == labels.label_mask(2));

  LabelVolume none({4, 1, 1}, 2); // all background
  CHECK_THROWS_AS(select_cluster_by_atlas(none, atlas), DomainError);
  CHECK_THROWS_AS(select_cluster_by_atlas(labels, Volume3D({3, 1, 1}, 0.0)),
                  ShapeError);
}

namespace {

/// Single growth pass written out longhand.
BinaryMask expand_reference(const BinaryMask& wm_initial, const Volume3D& hi,
                            const Volume3D& atlas,
                            const WmEstimationConfig& cfg,
                            const BinaryMask& mask) {
  const MaskedStats hi_stats = masked_stats(hi, wm_initial);
  const MaskedStats prob_stats = masked_stats(atlas, wm_initial);
  const double t_hi = hi_stats.mean + cfg.k_sigma * hi_stats.std;
  const double t_prob = prob_stats.mean;
  BinaryMask out = wm_initial;
  for (int z = 0; z < mask.nz(); ++z)
    for (int y = 0; y < mask.ny(); ++y)
      for (int x = 0; x < mask.nx(); ++x) {
        if (!mask.get(x, y, z) || wm_initial.get(x, y, z))
          continue;
        const double m_hi =
            neighborhood_mean(hi, x, y, z, cfg.neighborhood_radius, mask);
        const double m_prob =
            neighborhood_mean(atlas, x, y, z, cfg.neighborhood_radius, mask);
        if (m_hi > t_hi && m_prob > t_prob)
          out.set(x, y, z, true);
      }
  return out;
}

} // namespace

TEST_CASE("estimate_wm matches the reference single pass") {
  for (std::uint64_t seed : {81, 82, 83}) {
    CAPTURE(seed);
    const Dims3 dims{9, 8, 7};
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Volume3D hi(dims), atlas(dims);
    for (std::size_t i = 0; i < hi.size(); ++i) {
      hi[i] = unit(gen);
      atlas[i] = unit(gen);
    }
    const BinaryMask mask = random_mask(dims, seed + 5, 0.85);
    BinaryMask wm_initial(dims);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i] && unit(gen) < 0.3)
        wm_initial.set_flat(i, true);
    if (wm_initial.count() < 4)
      continue;

    WmEstimationConfig cfg;
    cfg.k_sigma = 1.0;
    const BinaryMask got = estimate_wm(wm_initial, hi, atlas, cfg, mask);
    const BinaryMask expected = expand_reference(wm_initial, hi, atlas, cfg, mask);
    CHECK(got == expected);

    // The initial mask is always contained in the estimate.
    for (std::size_t i = 0; i < got.size(); ++i)
      if (wm_initial[i])
        CHECK(got[i]);

    // A stricter threshold admits no voxel a looser one rejects.
    WmEstimationConfig strict = cfg;
    strict.k_sigma = 3.0;
    const BinaryMask tight = estimate_wm(wm_initial, hi, atlas, strict, mask);
    for (std::size_t i = 0; i < tight.size(); ++i)
      if (tight[i])
        CHECK(got[i]);

    // The fixpoint iteration only ever adds voxels on top of one pass.
    WmEstimationConfig fix = cfg;
    fix.iterate_to_fixpoint = true;
    const BinaryMask closed = estimate_wm(wm_initial, hi, atlas, fix, mask);
    for (std::size_t i = 0; i < got.size(); ++i)
      if (got[i])
        CHECK(closed[i]);
  }
}

TEST_CASE("estimate_wm grows across a bright bridge") {
  // wm_initial sits left of a hyperintense corridor with high atlas support;
  // one pass admits the corridor, thresholds frozen from the initial stats.
  const Dims3 dims{7, 3, 3};
  Volume3D hi(dims, 0.0), atlas(dims, 1.0);
  BinaryMask mask(dims, true);
  BinaryMask initial(dims);
  for (int z = 0; z < 3; ++z)
    for (int y = 0; y < 3; ++y)
      initial.set(0, y, z, true);
  for (int z = 0; z < 3; ++z)
    for (int y = 0; y < 3; ++y)
      for (int x = 4; x < 7; ++x)
        hi(x, y, z) = 1.0;

  WmEstimationConfig cfg; // k_sigma 3, sigma over initial = 0 -> t_hi = 0
  const BinaryMask one_pass = estimate_wm(initial, hi, atlas, cfg, mask);
  // t_prob = 1 (atlas constant): strict > comparison rejects every candidate.
  CHECK(one_pass == initial);

  Volume3D atlas2 = atlas;
  atlas2(0, 1, 1) = 0.5; // lowers t_prob below 1
  const BinaryMask grown = estimate_wm(initial, hi, atlas2, cfg, mask);
  CHECK(grown.count() > initial.count());
  // Voxels at x>=3 see the bright corridor through their neighborhood mean.
  CHECK(grown.get(4, 1, 1));
  CHECK(grown.get(6, 1, 1));
  CHECK_FALSE(grown.get(1, 1, 1)); // neighborhood mean still zero

  WmEstimationConfig fix = cfg;
  fix.iterate_to_fixpoint = true;
  const BinaryMask closed = estimate_wm(initial, hi, atlas2, fix, mask);
  for (std::size_t i = 0; i < grown.size(); ++i)
    if (grown[i])
      CHECK(closed[i]);
  CHECK(closed.get(3, 1, 1));
}

TEST_CASE("estimate_wm validation") {
  const Dims3 dims{4, 4, 4};
  const Volume3D vol(dims, 0.5);
  const BinaryMask mask(dims, true);
  BinaryMask initial(dims);
  initial.set(1, 1, 1, true);
  WmEstimationConfig cfg;
  cfg.k_sigma = -1.0;
  CHECK_THROWS_AS(estimate_wm(initial, vol, vol, cfg, mask), DomainError);
  cfg.k_sigma = 1.0;
  cfg.neighborhood_radius = -1;
  CHECK_THROWS_AS(estimate_wm(initial, vol, vol, cfg, mask), DomainError);
  cfg.neighborhood_radius = 1;
  CHECK_THROWS_AS(
      estimate_wm(initial, Volume3D({4, 4, 3}, 0.0), vol, cfg, mask),
      ShapeError);
  CHECK_THROWS_AS(estimate_wm(BinaryMask(dims), vol, vol, cfg, mask),
                  DomainError); // empty initial mask has no statistics
}

TEST_CASE("merge and pure cluster are bitwise set operations") {
  const Dims3 dims{6, 5, 4};
  const BinaryMask a = random_mask(dims, 91, 0.4);
  const BinaryMask b = random_mask(dims, 92, 0.4);

  const BinaryMask merged = merge_wm_ground_truth(a, b);
  const BinaryMask pure = pure_cluster(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(merged[i] == (a[i] || b[i]));
    CHECK(pure[i] == (a[i] && !b[i]));
  }
  CHECK_THROWS_AS(merge_wm_ground_truth(a, BinaryMask({6, 5, 3})), ShapeError);
  CHECK_THROWS_AS(pure_cluster(a, BinaryMask({6, 5, 3})), ShapeError);
}
