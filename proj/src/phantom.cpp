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

#include "flairhi/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flairhi/errors.hpp"
#include "flairhi/nifti.hpp"

namespace flairhi {

PhantomSpec PhantomSpec::desk_default() {
  PhantomSpec spec;
  spec.lesions = {{{32.0, 32.0, 24.0}, 5.0, 500.0},
                  {{24.0, 28.0, 20.0}, 4.0, 500.0},
                  {{40.0, 36.0, 26.0}, 3.0, 500.0}};
  return spec;
}

PhantomSpec PhantomSpec::full_scale() {
  PhantomSpec spec;
  spec.dims = {181, 217, 181};
  spec.brain_axes = {79.0, 95.0, 75.0};
  spec.lesions = {{{90.0, 108.0, 90.0}, 12.0, 500.0},
                  {{68.0, 96.0, 78.0}, 9.0, 500.0},
                  {{114.0, 120.0, 96.0}, 7.0, 500.0}};
  return spec;
}

PhantomSpec PhantomSpec::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("phantom spec: ") + e.what());
  }
  PhantomSpec spec = desk_default();
  try {
    if (doc.contains("dims"))
      for (int d = 0; d < 3; ++d)
        spec.dims[static_cast<std::size_t>(d)] = doc["dims"].at(d).get<int>();
    if (doc.contains("brain_axes"))
      for (int d = 0; d < 3; ++d)
        spec.brain_axes[static_cast<std::size_t>(d)] =
            doc["brain_axes"].at(d).get<double>();
    spec.wm_rho = doc.value("wm_rho", spec.wm_rho);
    spec.gm_rho = doc.value("gm_rho", spec.gm_rho);
    spec.csf_tier = doc.value("csf_tier", spec.csf_tier);
    spec.gm_tier = doc.value("gm_tier", spec.gm_tier);
    spec.wm_tier = doc.value("wm_tier", spec.wm_tier);
    spec.noise_sigma = doc.value("noise_sigma", spec.noise_sigma);
    spec.seed = doc.value("seed", spec.seed);
    spec.atlas_width = doc.value("atlas_width", spec.atlas_width);
    if (doc.contains("lesions")) {
      spec.lesions.clear();
      for (const auto& item : doc["lesions"]) {
        PhantomSpec::Lesion lesion;
        for (int d = 0; d < 3; ++d)
          lesion.center[static_cast<std::size_t>(d)] =
              item.at("center").at(d).get<double>();
        lesion.radius = item.at("radius").get<double>();
        lesion.intensity = item.value("intensity", lesion.intensity);
        spec.lesions.push_back(lesion);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("phantom spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

PhantomSpec PhantomSpec::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("phantom spec: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string PhantomSpec::to_json() const {
  nlohmann::ordered_json doc;
  doc["dims"] = dims;
  doc["brain_axes"] = brain_axes;
  doc["wm_rho"] = wm_rho;
  doc["gm_rho"] = gm_rho;
  doc["csf_tier"] = csf_tier;
  doc["gm_tier"] = gm_tier;
  doc["wm_tier"] = wm_tier;
  doc["noise_sigma"] = noise_sigma;
  doc["seed"] = seed;
  doc["atlas_width"] = atlas_width;
  doc["lesions"] = nlohmann::ordered_json::array();
  for (const Lesion& lesion : lesions)
    doc["lesions"].push_back({{"center", lesion.center},
                              {"radius", lesion.radius},
                              {"intensity", lesion.intensity}});
  return doc.dump(2) + "\n";
}

void PhantomSpec::validate() const {
  for (int d = 0; d < 3; ++d) {
    if (dims[static_cast<std::size_t>(d)] < 8)
      throw ConfigError("phantom spec: dims must be >= 8 per axis");
    if (!(brain_axes[static_cast<std::size_t>(d)] > 0.0))
      throw ConfigError("phantom spec: brain axes must be > 0");
  }
  if (!(wm_rho > 0.0 && wm_rho < gm_rho && gm_rho < 1.0))
    throw ConfigError("phantom spec: need 0 < wm_rho < gm_rho < 1");
  if (!(noise_sigma >= 0.0))
    throw ConfigError("phantom spec: noise_sigma must be >= 0");
  if (!(atlas_width > 0.0))
    throw ConfigError("phantom spec: atlas_width must be > 0");
  const double min_axis =
      std::min({brain_axes[0], brain_axes[1], brain_axes[2]});
  for (std::size_t l = 0; l < lesions.size(); ++l) {
    const Lesion& lesion = lesions[l];
    if (!(lesion.radius > 0.0))
      throw ConfigError("phantom spec: lesion radius must be > 0");
    double rho2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double c = (dims[static_cast<std::size_t>(d)] - 1) * 0.5;
      const double rel = (lesion.center[static_cast<std::size_t>(d)] - c) /
                         brain_axes[static_cast<std::size_t>(d)];
      rho2 += rel * rel;
    }
    if (std::sqrt(rho2) + lesion.radius / min_axis > 1.0)
      throw ConfigError("phantom spec: lesion " + std::to_string(l) +
                        " does not fit inside the brain ellipsoid");
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::max() / 4.0;

/// 3-4-5 chamfer distance (in chamfer units) to the seed set.
std::vector<double> chamfer_distance(const BinaryMask& seeds) {
  const int nx = seeds.nx(), ny = seeds.ny(), nz = seeds.nz();
  std::vector<double> dist(seeds.bits().size());
  for (std::size_t i = 0; i < dist.size(); ++i)
    dist[i] = seeds.bits()[i] ? 0.0 : kInf;

  struct Step {
    int dx, dy, dz;
    double w;
  };
  std::vector<Step> fwd;
  for (int dz = -1; dz <= 0; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0)))
          continue;
        const int axes = std::abs(dx) + std::abs(dy) + std::abs(dz);
        fwd.push_back({dx, dy, dz, axes == 1 ? 3.0 : axes == 2 ? 4.0 : 5.0});
      }

  auto sweep = [&](bool forward) {
    const int z0 = forward ? 0 : nz - 1, z1 = forward ? nz : -1;
    const int dzs = forward ? 1 : -1;
    for (int z = z0; z != z1; z += dzs) {
      const int y0 = forward ? 0 : ny - 1, y1 = forward ? ny : -1;
      for (int y = y0; y != y1; y += dzs) {
        const int x0 = forward ? 0 : nx - 1, x1 = forward ? nx : -1;
        for (int x = x0; x != x1; x += dzs) {
          const std::size_t i = seeds.index(x, y, z);
          double best = dist[i];
          for (const Step& s : fwd) {
            const int px = x + (forward ? s.dx : -s.dx);
            const int py = y + (forward ? s.dy : -s.dy);
            const int pz = z + (forward ? s.dz : -s.dz);
            if (px < 0 || px >= nx || py < 0 || py >= ny || pz < 0 || pz >= nz)
              continue;
            best = std::min(best, dist[seeds.index(px, py, pz)] + s.w);
          }
          dist[i] = best;
        }
      }
    }
  };
  sweep(true);
  sweep(false);
  return dist;
}

Volume3D sigmoid_atlas(const BinaryMask& territory, const Dims3& dims,
                       double width) {
  Volume3D signed_d = signed_distance(territory);
  Volume3D atlas(dims, 0.0);
  for (std::size_t i = 0; i < atlas.size(); ++i)
    atlas[i] = 1.0 / (1.0 + std::exp(signed_d[i] / width));
  return atlas;
}

} // namespace

Volume3D signed_distance(const BinaryMask& mask) {
  BinaryMask complement(mask.dims());
  bool any = false, all = true;
  for (std::size_t i = 0; i < mask.bits().size(); ++i) {
    complement.bits()[i] = mask.bits()[i] ? 0 : 1;
    any = any || mask.bits()[i];
    all = all && mask.bits()[i];
  }
  Volume3D out(mask.dims(), 0.0);
  if (!any) {
    std::fill(out.data().begin(), out.data().end(), kInf);
    return out;
  }
  if (all) {
    std::fill(out.data().begin(), out.data().end(), -kInf);
    return out;
  }
  const std::vector<double> d_out = chamfer_distance(mask);
  const std::vector<double> d_in = chamfer_distance(complement);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (d_out[i] - d_in[i]) / 3.0;
  return out;
}

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Dims3 dims = spec.dims;
  const double cx = (dims[0] - 1) * 0.5;
  const double cy = (dims[1] - 1) * 0.5;
  const double cz = (dims[2] - 1) * 0.5;

  Phantom ph{Volume3D(dims, 0.0), BinaryMask(dims), BinaryMask(dims),
             BinaryMask(dims),    BinaryMask(dims), BinaryMask(dims),
             Volume3D(dims, 0.0), Volume3D(dims, 0.0)};

  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        const double rx = (x - cx) / spec.brain_axes[0];
        const double ry = (y - cy) / spec.brain_axes[1];
        const double rz = (z - cz) / spec.brain_axes[2];
        const double rho = std::sqrt(rx * rx + ry * ry + rz * rz);
        if (rho > 1.0)
          continue;
        const std::size_t i = ph.flair.index(x, y, z);
        ph.brain_mask.bits()[i] = 1;
        if (rho <= spec.wm_rho) {
          bool in_lesion = false;
          double lesion_tier = 0.0;
          for (const PhantomSpec::Lesion& lesion : spec.lesions) {
            const double dx = x - lesion.center[0];
            const double dy = y - lesion.center[1];
            const double dz = z - lesion.center[2];
            if (dx * dx + dy * dy + dz * dz <= lesion.radius * lesion.radius) {
              in_lesion = true;
              lesion_tier = lesion.intensity;
              break;
            }
          }
          if (in_lesion) {
            ph.lesion_truth.bits()[i] = 1;
            ph.flair[i] = lesion_tier;
          } else {
            ph.wm_truth.bits()[i] = 1;
            ph.flair[i] = spec.wm_tier;
          }
        } else if (rho <= spec.gm_rho) {
          ph.gm_truth.bits()[i] = 1;
          ph.flair[i] = spec.gm_tier;
        } else {
          ph.csf_truth.bits()[i] = 1;
          ph.flair[i] = spec.csf_tier;
        }
      }

  // Additive Gaussian noise inside the brain only, Box-Muller over a seeded
  // stream in scan order so every platform produces the same bytes.
  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 gen(spec.seed);
    for (std::size_t i = 0; i < ph.flair.size(); ++i) {
      if (!ph.brain_mask.bits()[i])
        continue;
      const double u1 =
          static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53; // (0, 1]
      const double u2 = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      const double z = std::sqrt(-2.0 * std::log(u1)) *
                       std::cos(2.0 * std::numbers::pi * u2);
      ph.flair[i] += spec.noise_sigma * z;
    }
  }

  // Atlases describe healthy-tissue territory: the WM prior covers the WM
  // core including lesion sites (a lesion sits in what anatomically is white
  // matter), smoothed so that probabilities decay across tissue borders.
  BinaryMask wm_territory = ph.wm_truth;
  for (std::size_t i = 0; i < wm_territory.bits().size(); ++i)
    if (ph.lesion_truth.bits()[i])
      wm_territory.bits()[i] = 1;
  ph.wm_atlas = sigmoid_atlas(wm_territory, dims, spec.atlas_width);
  ph.gm_atlas = sigmoid_atlas(ph.gm_truth, dims, spec.atlas_width);

  return ph;
}

void write_phantom(const Phantom& phantom, const PhantomSpec& spec,
                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  nifti::write_volume(phantom.flair, out / "flair.nii",
                      nifti::Datatype::Float32);
  nifti::write_mask(phantom.brain_mask, out / "brain_mask.nii");
  nifti::write_mask(phantom.wm_truth, out / "wm_truth.nii");
  nifti::write_mask(phantom.gm_truth, out / "gm_truth.nii");
  nifti::write_mask(phantom.csf_truth, out / "csf_truth.nii");
  nifti::write_mask(phantom.lesion_truth, out / "lesion_truth.nii");
  nifti::write_volume(phantom.wm_atlas, out / "wm_atlas.nii",
                      nifti::Datatype::Float32);
  nifti::write_volume(phantom.gm_atlas, out / "gm_atlas.nii",
                      nifti::Datatype::Float32);
  std::ofstream spec_out(out / "phantom_spec.json", std::ios::binary);
  spec_out << spec.to_json();
  if (!spec_out)
    throw IoError("write_phantom: cannot write phantom_spec.json");
}

} // namespace flairhi
