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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>

#include "flairhi/nifti.hpp"
#include "flairhi/phantom.hpp"

using namespace flairhi;
namespace fs = std::filesystem;

namespace {

PhantomSpec small_spec() {
  PhantomSpec spec;
  spec.dims = {24, 24, 20};
  spec.brain_axes = {9.0, 9.0, 7.5};
  spec.lesions = {{{12.0, 12.0, 10.0}, 2.5, 500.0}};
  spec.seed = 420;
  return spec;
}

} // namespace

TEST_CASE("phantom tissues partition the brain") {
  const Phantom ph = generate_phantom(small_spec());

  REQUIRE(ph.brain_mask.count() > 0);
  REQUIRE(ph.lesion_truth.count() > 0);
  REQUIRE(ph.wm_truth.count() > 0);
  REQUIRE(ph.gm_truth.count() > 0);
  REQUIRE(ph.csf_truth.count() > 0);

  for (std::size_t i = 0; i < ph.brain_mask.size(); ++i) {
    const int classes = (ph.wm_truth[i] ? 1 : 0) + (ph.gm_truth[i] ? 1 : 0) +
                        (ph.csf_truth[i] ? 1 : 0) +
                        (ph.lesion_truth[i] ? 1 : 0);
    if (ph.brain_mask[i])
      CHECK(classes == 1); // exactly one tissue class inside the brain
    else
      CHECK(classes == 0);
  }
}

TEST_CASE("noiseless phantom exposes the raw tiers") {
  PhantomSpec spec = small_spec();
  spec.noise_sigma = 0.0;
  const Phantom ph = generate_phantom(spec);

  for (std::size_t i = 0; i < ph.flair.size(); ++i) {
    if (!ph.brain_mask[i]) {
      CHECK(ph.flair[i] == 0.0);
    } else if (ph.lesion_truth[i]) {
      CHECK(ph.flair[i] == 500.0);
    } else if (ph.wm_truth[i]) {
      CHECK(ph.flair[i] == spec.wm_tier);
    } else if (ph.gm_truth[i]) {
      CHECK(ph.flair[i] == spec.gm_tier);
    } else {
      CHECK(ph.flair[i] == spec.csf_tier);
    }
  }

  // The default contrast places the lesion tier 25% above white matter.
  CHECK(spec.lesions[0].intensity == doctest::Approx(1.25 * spec.wm_tier));
}

TEST_CASE("phantom generation is deterministic in the seed") {
  const PhantomSpec spec = small_spec();
  const Phantom a = generate_phantom(spec);
  const Phantom b = generate_phantom(spec);
  CHECK(std::memcmp(a.flair.data().data(), b.flair.data().data(),
                    a.flair.size() * sizeof(double)) == 0);
  CHECK(a.brain_mask == b.brain_mask);
  CHECK(a.lesion_truth == b.lesion_truth);
  CHECK(std::memcmp(a.wm_atlas.data().data(), b.wm_atlas.data().data(),
                    a.wm_atlas.size() * sizeof(double)) == 0);

  PhantomSpec other = spec;
  other.seed = 421;
  const Phantom c = generate_phantom(other);
  CHECK(std::memcmp(a.flair.data().data(), c.flair.data().data(),
                    a.flair.size() * sizeof(double)) != 0);
  CHECK(a.brain_mask == c.brain_mask); // geometry does not depend on the seed
}

TEST_CASE("noise is confined to the brain") {
  PhantomSpec spec = small_spec();
  const Phantom noisy = generate_phantom(spec);
  spec.noise_sigma = 0.0;
  const Phantom clean = generate_phantom(spec);

  bool any_changed = false;
  for (std::size_t i = 0; i < noisy.flair.size(); ++i) {
    if (!noisy.brain_mask[i]) {
      CHECK(noisy.flair[i] == 0.0);
      continue;
    }
    any_changed = any_changed || noisy.flair[i] != clean.flair[i];
  }
  CHECK(any_changed);
}

TEST_CASE("atlases are probabilistic and peak over their territory") {
  const Phantom ph = generate_phantom(small_spec());

  double wm_on_wm = 0.0, wm_on_lesion = 0.0, wm_on_csf = 0.0, gm_on_gm = 0.0;
  std::size_t n_wm = 0, n_lesion = 0, n_csf = 0, n_gm = 0;
  for (std::size_t i = 0; i < ph.wm_atlas.size(); ++i) {
    CHECK(ph.wm_atlas[i] >= 0.0);
    CHECK(ph.wm_atlas[i] <= 1.0);
    CHECK(ph.gm_atlas[i] >= 0.0);
    CHECK(ph.gm_atlas[i] <= 1.0);
    if (ph.wm_truth[i]) {
      wm_on_wm += ph.wm_atlas[i];
      ++n_wm;
    }
    if (ph.lesion_truth[i]) {
      wm_on_lesion += ph.wm_atlas[i];
      ++n_lesion;
    }
    if (ph.csf_truth[i]) {
      wm_on_csf += ph.wm_atlas[i];
      ++n_csf;
    }
    if (ph.gm_truth[i]) {
      gm_on_gm += ph.gm_atlas[i];
      ++n_gm;
    }
  }
  // The WM prior covers lesion territory: anatomically it is white matter.
  // Every in-territory voxel sits at negative signed distance, so its prior
  // exceeds 0.5; the deep central lesion scores much higher.
  CHECK(wm_on_wm / static_cast<double>(n_wm) > 0.5);
  CHECK(wm_on_lesion / static_cast<double>(n_lesion) > 0.75);
  CHECK(wm_on_csf / static_cast<double>(n_csf) < 0.35);
  CHECK(gm_on_gm / static_cast<double>(n_gm) > 0.5);
}

TEST_CASE("signed_distance is exact along axes and sane at corners") {
  BinaryMask ball({11, 11, 11});
  for (int z = 0; z < 11; ++z)
    for (int y = 0; y < 11; ++y)
      for (int x = 0; x < 11; ++x) {
        const int dx = x - 5, dy = y - 5, dz = z - 5;
        if (dx * dx + dy * dy + dz * dz <= 9)
          ball.set(x, y, z, true);
      }

  const Volume3D sd = signed_distance(ball);
  CHECK(sd(8, 5, 5) == -1.0); // boundary voxel of the ball
  CHECK(sd(9, 5, 5) == 1.0);
  CHECK(sd(10, 5, 5) == 2.0);
  // Center: the cheapest exit is one face diagonal plus two axial steps to
  // (8,6,5), which lies outside the ball (sqrt(10) > 3): (4+3+3)/3.
  CHECK(sd(5, 5, 5) == -10.0 / 3.0);

  // Chamfer 3-4-5 stays within a few percent of Euclidean on diagonals.
  const double diag = sd(0, 0, 0);
  const double euclid = std::sqrt(3.0 * 25.0) - 3.0; // approx to ball surface
  CHECK(diag > 0.8 * euclid);
  CHECK(diag < 1.25 * euclid);
}

TEST_CASE("spec validation rejects inconsistent shapes") {
  PhantomSpec spec = small_spec();
  CHECK_NOTHROW(spec.validate());

  PhantomSpec bad = spec;
  bad.dims = {4, 24, 20};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.wm_rho = 0.96; // must stay below gm_rho
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.lesions[0].radius = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.lesions[0].center = {1.0, 1.0, 1.0}; // far outside the WM core
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.noise_sigma = -2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.atlas_width = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("spec JSON round-trip") {
  PhantomSpec spec = small_spec();
  spec.noise_sigma = 7.25;
  spec.atlas_width = 1.5;

  const PhantomSpec back = PhantomSpec::from_json(spec.to_json());
  CHECK(back.dims == spec.dims);
  CHECK(back.brain_axes == spec.brain_axes);
  CHECK(back.wm_rho == spec.wm_rho);
  CHECK(back.gm_rho == spec.gm_rho);
  CHECK(back.csf_tier == spec.csf_tier);
  CHECK(back.gm_tier == spec.gm_tier);
  CHECK(back.wm_tier == spec.wm_tier);
  CHECK(back.noise_sigma == spec.noise_sigma);
  CHECK(back.seed == spec.seed);
  CHECK(back.atlas_width == spec.atlas_width);
  REQUIRE(back.lesions.size() == 1);
  CHECK(back.lesions[0].center == spec.lesions[0].center);
  CHECK(back.lesions[0].radius == spec.lesions[0].radius);
  CHECK(back.lesions[0].intensity == spec.lesions[0].intensity);

  CHECK_THROWS_AS(PhantomSpec::from_json("{ not json"), ConfigError);
  CHECK_THROWS_AS(PhantomSpec::from_json_file("/no/such/spec.json"), IoError);
}

TEST_CASE("presets validate and scale as documented") {
  const PhantomSpec desk = PhantomSpec::desk_default();
  CHECK_NOTHROW(desk.validate());
  CHECK(desk.dims == Dims3{64, 64, 48});
  CHECK(desk.lesions.size() == 3);
  for (const auto& lesion : desk.lesions)
    CHECK(lesion.intensity == doctest::Approx(1.25 * desk.wm_tier));

  const PhantomSpec full = PhantomSpec::full_scale();
  CHECK_NOTHROW(full.validate());
  CHECK(full.dims == Dims3{181, 217, 181});
  CHECK(full.lesions.size() == 3);
}

TEST_CASE("write_phantom emits the full file set") {
  const fs::path dir = fs::temp_directory_path() / "flairhi_phantom_test";
  fs::remove_all(dir);

  const PhantomSpec spec = small_spec();
  const Phantom ph = generate_phantom(spec);
  write_phantom(ph, spec, dir.string());

  for (const char* name :
       {"flair.nii", "brain_mask.nii", "wm_truth.nii", "gm_truth.nii",
        "csf_truth.nii", "lesion_truth.nii", "wm_atlas.nii", "gm_atlas.nii",
        "phantom_spec.json"})
    CHECK(fs::exists(dir / name));

  const Volume3D flair = nifti::read_volume(dir / "flair.nii");
  REQUIRE(flair.dims() == spec.dims);
  for (std::size_t i = 0; i < flair.size(); ++i)
    CHECK(flair[i] == static_cast<double>(static_cast<float>(ph.flair[i])));

  CHECK(nifti::read_mask(dir / "brain_mask.nii") == ph.brain_mask);
  CHECK(nifti::read_mask(dir / "lesion_truth.nii") == ph.lesion_truth);

  const PhantomSpec back =
      PhantomSpec::from_json_file((dir / "phantom_spec.json").string());
  CHECK(back.dims == spec.dims);
  CHECK(back.seed == spec.seed);
}
