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

#include "flairhi/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "flairhi/errors.hpp"
#include "flairhi/himap.hpp"
#include "flairhi/metrics.hpp"
#include "flairhi/nifti.hpp"
#include "flairhi/parallel.hpp"
#include "flairhi/png_io.hpp"

namespace fs = std::filesystem;

namespace flairhi {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace

std::string fnv1a_hex(const std::string& text) {
  return to_hex(fnv1a(text.data(), text.size()));
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("hash_file: cannot read " + path);
  std::uint64_t h = 14695981039346656037ull;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    if (got > 0)
      h = fnv1a(buf, static_cast<std::size_t>(got), h);
  }
  return to_hex(h);
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  PipelineConfig cfg;
  try {
    if (doc.contains("inputs")) {
      const auto& in = doc["inputs"];
      cfg.inputs.flair = in.value("flair", cfg.inputs.flair);
      cfg.inputs.t1 = in.value("t1", cfg.inputs.t1);
      cfg.inputs.brain_mask = in.value("brain_mask", cfg.inputs.brain_mask);
      cfg.inputs.wm_atlas = in.value("wm_atlas", cfg.inputs.wm_atlas);
      cfg.inputs.gm_atlas = in.value("gm_atlas", cfg.inputs.gm_atlas);
      cfg.inputs.labels = in.value("labels", cfg.inputs.labels);
      if (in.contains("lesion_gt"))
        cfg.inputs.lesion_gt = in["lesion_gt"].get<std::vector<std::string>>();
    }
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    cfg.threads = doc.value("threads", cfg.threads);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("nlm")) {
      const auto& nlm = doc["nlm"];
      cfg.nlm.sigma = nlm.value("sigma", cfg.nlm.sigma);
      cfg.nlm.patch_radius = nlm.value("patch_radius", cfg.nlm.patch_radius);
      cfg.nlm.search_radius = nlm.value("search_radius", cfg.nlm.search_radius);
      cfg.nlm.filter_h = nlm.value("filter_h", cfg.nlm.filter_h);
    }
    cfg.bin_count = doc.value("bin_count", cfg.bin_count);
    cfg.net_radius = doc.value("net_radius", cfg.net_radius);
    cfg.theta_step_deg = doc.value("theta_step_deg", cfg.theta_step_deg);
    cfg.neighborhood_radius =
        doc.value("neighborhood_radius", cfg.neighborhood_radius);
    cfg.kmeans_k = doc.value("kmeans_k", cfg.kmeans_k);
    if (doc.contains("wm")) {
      const auto& wm = doc["wm"];
      cfg.wm.k_sigma = wm.value("k_sigma", cfg.wm.k_sigma);
      cfg.wm.neighborhood_radius =
          wm.value("neighborhood_radius", cfg.wm.neighborhood_radius);
      cfg.wm.iterate_to_fixpoint =
          wm.value("iterate_to_fixpoint", cfg.wm.iterate_to_fixpoint);
    }
    if (doc.contains("overlays")) {
      const auto& ov = doc["overlays"];
      cfg.overlays.enabled = ov.value("enabled", cfg.overlays.enabled);
      cfg.overlays.slice = ov.value("slice", cfg.overlays.slice);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("config: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

namespace {

nlohmann::json param_document(const PipelineConfig& cfg) {
  nlohmann::json doc; // keys sorted: canonical for hashing
  doc["seed"] = cfg.seed;
  doc["nlm"] = {{"sigma", cfg.nlm.sigma},
                {"patch_radius", cfg.nlm.patch_radius},
                {"search_radius", cfg.nlm.search_radius},
                {"filter_h", cfg.nlm.filter_h}};
  doc["bin_count"] = cfg.bin_count;
  doc["net_radius"] = cfg.net_radius;
  doc["theta_step_deg"] = cfg.theta_step_deg;
  doc["neighborhood_radius"] = cfg.neighborhood_radius;
  doc["kmeans_k"] = cfg.kmeans_k;
  doc["wm"] = {{"k_sigma", cfg.wm.k_sigma},
               {"neighborhood_radius", cfg.wm.neighborhood_radius},
               {"iterate_to_fixpoint", cfg.wm.iterate_to_fixpoint}};
  doc["overlays"] = {{"enabled", cfg.overlays.enabled},
                     {"slice", cfg.overlays.slice}};
  return doc;
}

} // namespace

std::string PipelineConfig::to_json() const {
  nlohmann::ordered_json doc;
  doc["inputs"] = {{"flair", inputs.flair},
                   {"t1", inputs.t1},
                   {"brain_mask", inputs.brain_mask},
                   {"wm_atlas", inputs.wm_atlas},
                   {"gm_atlas", inputs.gm_atlas},
                   {"labels", inputs.labels},
                   {"lesion_gt", inputs.lesion_gt}};
  doc["out_dir"] = out_dir;
  doc["threads"] = threads;
  doc["seed"] = seed;
  doc["nlm"] = {{"sigma", nlm.sigma},
                {"patch_radius", nlm.patch_radius},
                {"search_radius", nlm.search_radius},
                {"filter_h", nlm.filter_h}};
  doc["bin_count"] = bin_count;
  doc["net_radius"] = net_radius;
  doc["theta_step_deg"] = theta_step_deg;
  doc["neighborhood_radius"] = neighborhood_radius;
  doc["kmeans_k"] = kmeans_k;
  doc["wm"] = {{"k_sigma", wm.k_sigma},
               {"neighborhood_radius", wm.neighborhood_radius},
               {"iterate_to_fixpoint", wm.iterate_to_fixpoint}};
  doc["overlays"] = {{"enabled", overlays.enabled}, {"slice", overlays.slice}};
  return doc.dump(2) + "\n";
}

void PipelineConfig::validate() const {
  nlm.validate();
  if (bin_count < 2)
    throw ConfigError("config: bin_count must be >= 2");
  if (net_radius < 1)
    throw ConfigError("config: net_radius must be >= 1");
  if (theta_step_deg < 1 || 360 % theta_step_deg != 0)
    throw ConfigError("config: theta_step_deg must divide 360");
  if (neighborhood_radius < 0)
    throw ConfigError("config: neighborhood_radius must be >= 0");
  if (kmeans_k < 2)
    throw ConfigError("config: kmeans_k must be >= 2");
  if (!(wm.k_sigma >= 0.0))
    throw ConfigError("config: wm.k_sigma must be >= 0");
  if (wm.neighborhood_radius < 0)
    throw ConfigError("config: wm.neighborhood_radius must be >= 0");
  if (threads < 0)
    throw ConfigError("config: threads must be >= 0");
  if (out_dir.empty())
    throw ConfigError("config: out_dir must not be empty");
}

std::string PipelineConfig::param_hash() const {
  return fnv1a_hex(param_document(*this).dump());
}

const char* stage_name(Stage stage) {
  switch (stage) {
  case Stage::Denoise: return "denoise";
  case Stage::Normalize: return "normalize";
  case Stage::Sobel: return "sobel";
  case Stage::Intermediate: return "intermediate";
  case Stage::HiMap: return "himap";
  case Stage::WmEstimate: return "wm_estimate";
  case Stage::Metrics: return "metrics";
  case Stage::Overlays: return "overlays";
  }
  return "?";
}

namespace {

using InputHashes = std::vector<std::pair<std::string, std::string>>;

void atomic_write_text(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out)
      throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

void atomic_write_volume(const Volume3D& vol, const fs::path& path,
                         nifti::Datatype dt, const nifti::Orientation* ori) {
  fs::path tmp = path;
  tmp += ".partial";
  nifti::write_volume(vol, tmp, dt, ori);
  fs::rename(tmp, path);
}

void atomic_write_mask(const BinaryMask& mask, const fs::path& path,
                       const nifti::Orientation* ori, const Spacing3& spacing) {
  fs::path tmp = path;
  tmp += ".partial";
  nifti::write_mask(mask, tmp, ori, spacing);
  fs::rename(tmp, path);
}

LabelVolume load_labels(const fs::path& path, const BinaryMask& mask) {
  const Volume3D raw = nifti::read_volume(path);
  require_same_dims(raw.dims(), mask.dims(), "labels");
  LabelVolume labels(raw.dims(), 0);
  int max_label = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const long v = std::lround(raw[i]);
    if (v < 0 || v > 255)
      throw FormatError("labels: value " + std::to_string(raw[i]) +
                        " is not a label");
    const int lbl = mask.bits()[i] ? static_cast<int>(v) : 0;
    labels.labels[i] = static_cast<std::uint8_t>(lbl);
    max_label = std::max(max_label, lbl);
  }
  if (max_label < 1)
    throw DomainError("labels: no nonzero label inside the mask");
  labels.num_clusters = max_label;
  return labels;
}

class Runner {
public:
  Runner(const PipelineConfig& cfg, std::ostream& log)
      : cfg_(cfg), log_(log), out_(cfg.out_dir), stamps_(out_ / "stamps") {}

  int run(Stage last) {
    const int rc = validate_inputs(last);
    if (rc != 0)
      return rc;
    fs::create_directories(stamps_);
    atomic_write_text(out_ / "pipeline_config.json", cfg_.to_json());
    set_default_threads(cfg_.threads);

    static const Stage order[] = {Stage::Denoise,  Stage::Normalize,
                                  Stage::Sobel,    Stage::Intermediate,
                                  Stage::HiMap,    Stage::WmEstimate,
                                  Stage::Metrics,  Stage::Overlays};
    for (Stage stage : order) {
      if (static_cast<int>(stage) > static_cast<int>(last))
        break;
      try {
        dispatch(stage);
      } catch (const std::exception& e) {
        log_ << "[" << stage_name(stage) << "] error: " << e.what() << "\n";
        return 1;
      }
    }
    return 0;
  }

private:
  const PipelineConfig& cfg_;
  std::ostream& log_;
  fs::path out_;
  fs::path stamps_;
  std::map<std::string, std::string> stage_hash_;

  fs::path artifact(const char* name) const { return out_ / name; }

  int validate_inputs(Stage last) {
    try {
      cfg_.validate();
    } catch (const std::exception& e) {
      log_ << "[config] error: " << e.what() << "\n";
      return 2;
    }
    bool ok = true;
    auto need = [&](const char* flag, const std::string& path, bool required) {
      if (path.empty()) {
        if (required) {
          log_ << "[config] error: " << flag << " is required for the "
               << stage_name(last) << " stage\n";
          ok = false;
        }
        return;
      }
      if (!fs::exists(path)) {
        log_ << "[config] error: " << flag << ": file not found: " << path
             << "\n";
        ok = false;
      }
    };
    need("--flair", cfg_.inputs.flair, true);
    need("--t1", cfg_.inputs.t1, false);
    need("--brain-mask", cfg_.inputs.brain_mask, false);
    need("--labels", cfg_.inputs.labels, false);
    const bool wm_stage = static_cast<int>(last) >= static_cast<int>(Stage::WmEstimate);
    const bool metrics_stage = static_cast<int>(last) >= static_cast<int>(Stage::Metrics);
    need("--wm-atlas", cfg_.inputs.wm_atlas, wm_stage);
    need("--gm-atlas", cfg_.inputs.gm_atlas, metrics_stage);
    if (metrics_stage && cfg_.inputs.lesion_gt.empty()) {
      log_ << "[config] error: --lesion-gt is required for the metrics stage\n";
      ok = false;
    }
    for (const std::string& gt : cfg_.inputs.lesion_gt)
      need("--lesion-gt", gt, false);
    if (!ok)
      return 2;
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) {
      log_ << "[config] error: cannot create " << out_.string() << ": "
           << ec.message() << "\n";
      return 2;
    }
    return 0;
  }

  std::string brain_mask_hash() const {
    if (!cfg_.inputs.brain_mask.empty())
      return hash_file(cfg_.inputs.brain_mask);
    return "derived-from-flair:" + hash_file(cfg_.inputs.flair);
  }

  BinaryMask load_brain_mask(const Volume3D& reference) const {
    if (!cfg_.inputs.brain_mask.empty()) {
      BinaryMask mask = nifti::read_mask(cfg_.inputs.brain_mask);
      require_same_dims(mask.dims(), reference.dims(), "brain mask");
      return mask;
    }
    BinaryMask mask(reference.dims());
    for (std::size_t i = 0; i < reference.size(); ++i)
      mask.bits()[i] = reference[i] != 0.0 ? 1 : 0;
    return mask;
  }

  /// Runs `body` unless a stamp with the expected hash exists and all
  /// outputs are present. The expected hash folds the stage name, its
  /// parameters, and its input digests (upstream stage hashes chain here).
  void run_stage(Stage stage, const nlohmann::json& params,
                 const InputHashes& inputs,
                 const std::vector<fs::path>& outputs,
                 const std::function<void()>& body) {
    const char* name = stage_name(stage);
    nlohmann::json meta;
    meta["stage"] = name;
    meta["params"] = params;
    nlohmann::json input_doc;
    for (const auto& [key, digest] : inputs)
      input_doc[key] = digest;
    meta["inputs"] = input_doc;
    const std::string expected = fnv1a_hex(meta.dump());
    meta["hash"] = expected;

    const fs::path stamp = stamps_ / (std::string(name) + ".json");
    if (fs::exists(stamp)) {
      try {
        std::ifstream in(stamp, std::ios::binary);
        nlohmann::json doc = nlohmann::json::parse(in);
        bool outputs_present = true;
        for (const fs::path& p : outputs)
          outputs_present = outputs_present && fs::exists(p);
        if (doc.value("hash", "") == expected && outputs_present) {
          log_ << "[" << name << "] reused (stamp " << expected << ")\n";
          stage_hash_[name] = expected;
          return;
        }
      } catch (const nlohmann::json::exception&) {
        // unreadable stamp: fall through and recompute
      }
    }

    const auto t0 = std::chrono::steady_clock::now();
    body();
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    atomic_write_text(stamp, meta.dump(2) + "\n");
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] done in %.2f s\n", name, dt);
    log_ << line;
    stage_hash_[name] = expected;
  }

  std::string upstream(const char* name) const {
    return stage_hash_.at(name);
  }

  void dispatch(Stage stage) {
    const nlohmann::json params = param_document(cfg_);
    switch (stage) {
    case Stage::Denoise:
      run_stage(stage, params["nlm"],
                {{"flair", hash_file(cfg_.inputs.flair)},
                 {"brain_mask", brain_mask_hash()}},
                {artifact("denoised.nii")}, [&] {
                  nifti::Orientation ori;
                  const Volume3D flair =
                      nifti::read_volume(cfg_.inputs.flair, &ori);
                  const BinaryMask mask = load_brain_mask(flair);
                  const Volume3D denoised = nlm_denoise(flair, mask, cfg_.nlm);
                  atomic_write_volume(denoised, artifact("denoised.nii"),
                                      nifti::Datatype::Float32, &ori);
                });
      break;
    case Stage::Normalize:
      run_stage(stage, nlohmann::json::object(),
                {{"denoised", upstream("denoise")},
                 {"brain_mask", brain_mask_hash()}},
                {artifact("normalized.nii")}, [&] {
                  nifti::Orientation ori;
                  const Volume3D denoised =
                      nifti::read_volume(artifact("denoised.nii"), &ori);
                  const BinaryMask mask = load_brain_mask(denoised);
                  const Volume3D normalized = normalize_intensity(denoised, mask);
                  atomic_write_volume(normalized, artifact("normalized.nii"),
                                      nifti::Datatype::Float32, &ori);
                });
      break;
    case Stage::Sobel:
      run_stage(stage, nlohmann::json::object(),
                {{"normalized", upstream("normalize")}},
                {artifact("sobel.nii")}, [&] {
                  nifti::Orientation ori;
                  const Volume3D normalized =
                      nifti::read_volume(artifact("normalized.nii"), &ori);
                  const Volume3D gradient = sobel_magnitude(normalized);
                  atomic_write_volume(gradient, artifact("sobel.nii"),
                                      nifti::Datatype::Float32, &ori);
                });
      break;
    case Stage::Intermediate:
      run_stage(stage, {{"bin_count", cfg_.bin_count}},
                {{"normalized", upstream("normalize")},
                 {"sobel", upstream("sobel")},
                 {"brain_mask", brain_mask_hash()}},
                {artifact("intermediate.nii")}, [&] {
                  nifti::Orientation ori;
                  const Volume3D normalized =
                      nifti::read_volume(artifact("normalized.nii"), &ori);
                  const Volume3D gradient =
                      nifti::read_volume(artifact("sobel.nii"));
                  const BinaryMask mask = load_brain_mask(normalized);
                  auto [vol, hist] =
                      build_intermediate(normalized, gradient, mask, cfg_.bin_count);
                  atomic_write_volume(vol, artifact("intermediate.nii"),
                                      nifti::Datatype::Float32, &ori);
                });
      break;
    case Stage::HiMap:
      run_stage(stage,
                {{"net_radius", cfg_.net_radius},
                 {"theta_step_deg", cfg_.theta_step_deg},
                 {"neighborhood_radius", cfg_.neighborhood_radius}},
                {{"intermediate", upstream("intermediate")},
                 {"brain_mask", brain_mask_hash()}},
                {artifact("hi_map.nii")}, [&] {
                  nifti::Orientation ori;
                  const Volume3D intermediate =
                      nifti::read_volume(artifact("intermediate.nii"), &ori);
                  const BinaryMask mask = load_brain_mask(intermediate);
                  const auto t0 = std::chrono::steady_clock::now();
                  const PointNet net = build_point_net_volume(
                      mask, cfg_.net_radius, cfg_.theta_step_deg);
                  const ScoreMapResult scored = score_map(
                      intermediate, mask, net, cfg_.neighborhood_radius);
                  const double dt = std::chrono::duration<double>(
                                        std::chrono::steady_clock::now() - t0)
                                        .count();
                  const double rate =
                      static_cast<double>(mask.count()) / std::max(dt, 1e-9);
                  char line[160];
                  std::snprintf(line, sizeof(line),
                                "[himap] scored %zu voxels at %.3g voxels/s\n",
                                mask.count(), rate);
                  log_ << line;
                  if (scored.degenerate)
                    log_ << "[himap] warning: degenerate contrast, "
                            "hyperintensity map is all zeros\n";
                  atomic_write_volume(scored.map, artifact("hi_map.nii"),
                                      nifti::Datatype::Float32, &ori);
                });
      break;
    case Stage::WmEstimate: {
      InputHashes inputs{{"normalized", upstream("normalize")},
                         {"himap", upstream("himap")},
                         {"wm_atlas", hash_file(cfg_.inputs.wm_atlas)},
                         {"brain_mask", brain_mask_hash()}};
      if (!cfg_.inputs.t1.empty())
        inputs.emplace_back("t1", hash_file(cfg_.inputs.t1));
      if (!cfg_.inputs.labels.empty())
        inputs.emplace_back("labels", hash_file(cfg_.inputs.labels));
      run_stage(stage,
                {{"kmeans_k", cfg_.kmeans_k},
                 {"seed", cfg_.seed},
                 {"k_sigma", cfg_.wm.k_sigma},
                 {"neighborhood_radius", cfg_.wm.neighborhood_radius},
                 {"iterate_to_fixpoint", cfg_.wm.iterate_to_fixpoint}},
                inputs,
                {artifact("labels.nii"), artifact("wm_initial.nii"),
                 artifact("wm_estimated.nii")},
                [&] {
                  nifti::Orientation ori;
                  Volume3D normalized =
                      nifti::read_volume(artifact("normalized.nii"), &ori);
                  const BinaryMask mask = load_brain_mask(normalized);
                  const Volume3D wm_atlas =
                      nifti::read_volume(cfg_.inputs.wm_atlas);
                  const Spacing3 spacing = normalized.spacing();

                  LabelVolume labels;
                  if (!cfg_.inputs.labels.empty()) {
                    labels = load_labels(cfg_.inputs.labels, mask);
                  } else {
                    std::vector<Volume3D> channels;
                    channels.push_back(std::move(normalized));
                    if (!cfg_.inputs.t1.empty()) {
                      const Volume3D t1 = nifti::read_volume(cfg_.inputs.t1);
                      channels.push_back(rescale_unit(t1, mask));
                    }
                    labels = initial_segmentation(channels, mask, cfg_.kmeans_k,
                                                  cfg_.seed);
                  }
                  Volume3D label_vol(labels.dims, 0.0, spacing);
                  for (std::size_t i = 0; i < labels.size(); ++i)
                    label_vol[i] = static_cast<double>(labels.labels[i]);
                  atomic_write_volume(label_vol, artifact("labels.nii"),
                                      nifti::Datatype::Uint8, &ori);

                  const BinaryMask wm_initial =
                      select_cluster_by_atlas(labels, wm_atlas);
                  const Volume3D hi_map =
                      nifti::read_volume(artifact("hi_map.nii"));
                  const BinaryMask wm_estimated =
                      estimate_wm(wm_initial, hi_map, wm_atlas, cfg_.wm, mask);
                  atomic_write_mask(wm_initial, artifact("wm_initial.nii"), &ori,
                                    spacing);
                  atomic_write_mask(wm_estimated, artifact("wm_estimated.nii"),
                                    &ori, spacing);
                });
      break;
    }
    case Stage::Metrics: {
      InputHashes inputs{{"flair", hash_file(cfg_.inputs.flair)},
                         {"intermediate", upstream("intermediate")},
                         {"himap", upstream("himap")},
                         {"wm_estimate", upstream("wm_estimate")},
                         {"gm_atlas", hash_file(cfg_.inputs.gm_atlas)},
                         {"brain_mask", brain_mask_hash()}};
      for (std::size_t g = 0; g < cfg_.inputs.lesion_gt.size(); ++g)
        inputs.emplace_back("lesion_gt" + std::to_string(g),
                            hash_file(cfg_.inputs.lesion_gt[g]));
      run_stage(stage, nlohmann::json::object(), inputs,
                {artifact("metrics.json")}, [&] {
                  const Volume3D flair = nifti::read_volume(cfg_.inputs.flair);
                  const BinaryMask mask = load_brain_mask(flair);
                  const Volume3D intermediate =
                      nifti::read_volume(artifact("intermediate.nii"));
                  const Volume3D hi_map =
                      nifti::read_volume(artifact("hi_map.nii"));
                  const BinaryMask wm_initial =
                      nifti::read_mask(artifact("wm_initial.nii"));
                  const BinaryMask wm_estimated =
                      nifti::read_mask(artifact("wm_estimated.nii"));
                  const BinaryMask lesion = load_lesion_union(mask.dims());
                  const Volume3D gm_atlas =
                      nifti::read_volume(cfg_.inputs.gm_atlas);
                  const LabelVolume labels =
                      load_labels(artifact("labels.nii"), mask);
                  const BinaryMask gm_cluster =
                      select_cluster_by_atlas(labels, gm_atlas);

                  const BinaryMask wm_pure = pure_cluster(wm_initial, lesion);
                  const BinaryMask gm_pure = pure_cluster(gm_cluster, lesion);
                  const Volume3D flair_r = rescale_unit(flair, mask);
                  const Volume3D intermediate_r = rescale_unit(intermediate, mask);
                  const Volume3D hi_r = rescale_unit(hi_map, mask);

                  MetricsReport report = brightness_report(
                      {{"flair", &flair_r},
                       {"intermediate", &intermediate_r},
                       {"hi_map", &hi_r}},
                      lesion, wm_pure, gm_pure);
                  const BinaryMask wm_whole =
                      merge_wm_ground_truth(wm_initial, lesion);
                  report.masks.push_back(
                      {"wm_initial_vs_wm_whole", dsc(wm_whole, wm_initial),
                       lesion_intersection(lesion, wm_initial)});
                  report.masks.push_back(
                      {"wm_estimated_vs_wm_whole", dsc(wm_whole, wm_estimated),
                       lesion_intersection(lesion, wm_estimated)});
                  report.config_hash = cfg_.param_hash();
                  atomic_write_text(artifact("metrics.json"), to_json(report));
                });
      break;
    }
    case Stage::Overlays: {
      InputHashes inputs{{"flair", hash_file(cfg_.inputs.flair)},
                         {"himap", upstream("himap")},
                         {"wm_estimate", upstream("wm_estimate")},
                         {"brain_mask", brain_mask_hash()}};
      for (std::size_t g = 0; g < cfg_.inputs.lesion_gt.size(); ++g)
        inputs.emplace_back("lesion_gt" + std::to_string(g),
                            hash_file(cfg_.inputs.lesion_gt[g]));
      std::vector<fs::path> outputs;
      if (cfg_.overlays.enabled)
        outputs = {artifact("overlay_flair.png"), artifact("overlay_hi.png"),
                   artifact("overlay_wm.png")};
      run_stage(stage,
                {{"enabled", cfg_.overlays.enabled},
                 {"slice", cfg_.overlays.slice}},
                inputs, outputs, [&] {
                  if (!cfg_.overlays.enabled) {
                    log_ << "[overlays] disabled\n";
                    return;
                  }
                  const Volume3D flair = nifti::read_volume(cfg_.inputs.flair);
                  const BinaryMask mask = load_brain_mask(flair);
                  const Volume3D hi_map =
                      nifti::read_volume(artifact("hi_map.nii"));
                  const BinaryMask wm_estimated =
                      nifti::read_mask(artifact("wm_estimated.nii"));
                  const BinaryMask lesion = load_lesion_union(mask.dims());
                  const int z = cfg_.overlays.slice < 0 ? flair.nz() / 2
                                                        : cfg_.overlays.slice;
                  render_to(flair, lesion, z, "overlay_flair.png");
                  render_to(hi_map, lesion, z, "overlay_hi.png");
                  render_to(flair, wm_estimated, z, "overlay_wm.png");
                });
      break;
    }
    }
  }

  BinaryMask load_lesion_union(const Dims3& dims) const {
    BinaryMask lesion(dims);
    for (const std::string& path : cfg_.inputs.lesion_gt) {
      const BinaryMask gt = nifti::read_mask(path);
      require_same_dims(gt.dims(), dims, "lesion ground truth");
      for (std::size_t i = 0; i < lesion.bits().size(); ++i)
        if (gt.bits()[i])
          lesion.bits()[i] = 1;
    }
    return lesion;
  }

  void render_to(const Volume3D& image, const BinaryMask& mask, int z,
                 const char* name) const {
    fs::path tmp = artifact(name);
    tmp += ".partial";
    render_overlay(image, mask, z, tmp.string());
    fs::rename(tmp, artifact(name));
  }
};

} // namespace

int run_pipeline(const PipelineConfig& cfg, Stage last, std::ostream* log) {
  std::ostream& sink = log ? *log : std::cerr;
  Runner runner(cfg, sink);
  return runner.run(last);
}

} // namespace flairhi
