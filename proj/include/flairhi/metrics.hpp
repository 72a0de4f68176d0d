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

#ifndef FLAIRHI_METRICS_HPP
#define FLAIRHI_METRICS_HPP

#include <string>
#include <vector>

#include "flairhi/volume.hpp"

namespace flairhi {

/// Intensity percentage difference: how much brighter the lesion voxels are
/// than the reference tissue, in percent.
double ipd(const Volume3D& image, const BinaryMask& lesion,
           const BinaryMask& tissue);

/// Dice similarity coefficient; 1.0 when both masks are empty.
double dsc(const BinaryMask& a, const BinaryMask& b);

/// Percentage of ground-truth lesion voxels contained in the estimated mask.
double lesion_intersection(const BinaryMask& lesion_gt,
                           const BinaryMask& estimated);

/// Non-owning named image handle for report construction.
struct NamedImage {
  std::string name;
  const Volume3D* image = nullptr;
};

struct BrightnessEntry {
  std::string image;
  std::string tissue;
  double tissue_mean = 0.0;
  double tissue_std = 0.0;
  double lesion_mean = 0.0;
  double ipd_percent = 0.0;
};

struct MaskEntry {
  std::string name;
  double dsc = 0.0;
  double li_percent = 0.0;
};

struct MetricsReport {
  std::vector<std::string> images;
  std::vector<BrightnessEntry> brightness;
  std::vector<MaskEntry> masks;
  std::string config_hash;
};

/// Per-image, per-tissue brightness table: tissue mean/std, lesion mean, and
/// the intensity percentage difference against WM and GM.
MetricsReport brightness_report(const std::vector<NamedImage>& images,
                                const BinaryMask& lesion,
                                const BinaryMask& wm_pure,
                                const BinaryMask& gm_pure);

/// Mean and spread of the IPD values of matching (image, tissue) entries
/// across several reports (e.g. time-points of one patient).
struct AggregateEntry {
  std::string image;
  std::string tissue;
  double ipd_mean = 0.0;
  double ipd_std = 0.0;
  int count = 0;
};

std::vector<AggregateEntry>
aggregate_reports(const std::vector<MetricsReport>& reports);

/// Rounds to 6 significant digits (the report serialization precision).
double round_sig6(double v);

/// JSON document with top-level keys `images`, `metrics`, `config_hash`;
/// every number carries 6 significant digits.
std::string to_json(const MetricsReport& report);

} // namespace flairhi

#endif // FLAIRHI_METRICS_HPP
