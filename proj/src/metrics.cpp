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

#include "flairhi/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "flairhi/errors.hpp"

namespace flairhi {

double ipd(const Volume3D& image, const BinaryMask& lesion,
           const BinaryMask& tissue) {
  require_same_dims(image.dims(), lesion.dims(), "ipd");
  require_same_dims(image.dims(), tissue.dims(), "ipd");
  const double lesion_mean = masked_stats(image, lesion).mean;
  const double tissue_mean = masked_stats(image, tissue).mean;
  if (tissue_mean == 0.0)
    throw DomainError("ipd: tissue mean is zero");
  return (lesion_mean / tissue_mean - 1.0) * 100.0;
}

double dsc(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.dims(), b.dims(), "dsc");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < a.bits().size(); ++i) {
    const bool in_a = a.bits()[i] != 0;
    const bool in_b = b.bits()[i] != 0;
    tp += (in_a && in_b) ? 1 : 0;
    fp += (!in_a && in_b) ? 1 : 0;
    fn += (in_a && !in_b) ? 1 : 0;
  }
  if (tp + fp + fn == 0)
    return 1.0;
  return 2.0 * static_cast<double>(tp) /
         (static_cast<double>(fp) + static_cast<double>(fn) +
          2.0 * static_cast<double>(tp));
}

double lesion_intersection(const BinaryMask& lesion_gt,
                           const BinaryMask& estimated) {
  require_same_dims(lesion_gt.dims(), estimated.dims(), "lesion_intersection");
  std::size_t gt = 0, kept = 0;
  for (std::size_t i = 0; i < lesion_gt.bits().size(); ++i) {
    if (!lesion_gt.bits()[i])
      continue;
    ++gt;
    if (estimated.bits()[i])
      ++kept;
  }
  if (gt == 0)
    throw DomainError("lesion_intersection: empty ground truth");
  return static_cast<double>(kept) / static_cast<double>(gt) * 100.0;
}

MetricsReport brightness_report(const std::vector<NamedImage>& images,
                                const BinaryMask& lesion,
                                const BinaryMask& wm_pure,
                                const BinaryMask& gm_pure) {
  MetricsReport report;
  const std::pair<const char*, const BinaryMask*> tissues[] = {
      {"wm", &wm_pure}, {"gm", &gm_pure}};
  for (const NamedImage& named : images) {
    if (named.image == nullptr)
      throw DomainError("brightness_report: null image '" + named.name + "'");
    report.images.push_back(named.name);
    const double lesion_mean = masked_stats(*named.image, lesion).mean;
    for (const auto& [tissue_name, tissue_mask] : tissues) {
      const MaskedStats ts = masked_stats(*named.image, *tissue_mask);
      BrightnessEntry entry;
      entry.image = named.name;
      entry.tissue = tissue_name;
      entry.tissue_mean = ts.mean;
      entry.tissue_std = ts.std;
      entry.lesion_mean = lesion_mean;
      entry.ipd_percent = ipd(*named.image, lesion, *tissue_mask);
      report.brightness.push_back(std::move(entry));
    }
  }
  return report;
}

std::vector<AggregateEntry>
aggregate_reports(const std::vector<MetricsReport>& reports) {
  std::vector<AggregateEntry> out;
  auto find = [&out](const std::string& image,
                     const std::string& tissue) -> AggregateEntry& {
    for (AggregateEntry& e : out)
      if (e.image == image && e.tissue == tissue)
        return e;
    out.push_back({image, tissue, 0.0, 0.0, 0});
    return out.back();
  };
  for (const MetricsReport& report : reports)
    for (const BrightnessEntry& entry : report.brightness) {
      AggregateEntry& agg = find(entry.image, entry.tissue);
      agg.ipd_mean += entry.ipd_percent;
      agg.ipd_std += entry.ipd_percent * entry.ipd_percent;
      ++agg.count;
    }
  for (AggregateEntry& agg : out) {
    const double n = static_cast<double>(agg.count);
    agg.ipd_mean /= n;
    const double var = agg.ipd_std / n - agg.ipd_mean * agg.ipd_mean;
    agg.ipd_std = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  return out;
}

double round_sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::strtod(buf, nullptr);
}

std::string to_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["images"] = report.images;
  nlohmann::ordered_json brightness = nlohmann::ordered_json::array();
  for (const BrightnessEntry& e : report.brightness)
    brightness.push_back({{"image", e.image},
                          {"tissue", e.tissue},
                          {"tissue_mean", round_sig6(e.tissue_mean)},
                          {"tissue_std", round_sig6(e.tissue_std)},
                          {"lesion_mean", round_sig6(e.lesion_mean)},
                          {"ipd_percent", round_sig6(e.ipd_percent)}});
  nlohmann::ordered_json masks = nlohmann::ordered_json::array();
  for (const MaskEntry& e : report.masks)
    masks.push_back({{"name", e.name},
                     {"dsc", round_sig6(e.dsc)},
                     {"li_percent", round_sig6(e.li_percent)}});
  doc["metrics"] = {{"brightness", brightness}, {"masks", masks}};
  doc["config_hash"] = report.config_hash;
  return doc.dump(2) + "\n";
}

} // namespace flairhi
