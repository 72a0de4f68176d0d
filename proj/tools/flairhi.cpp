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

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flairhi/errors.hpp"
#include "flairhi/phantom.hpp"
#include "flairhi/pipeline.hpp"

namespace {

struct CliValues {
  std::string config;
  std::string flair;
  std::string t1;
  std::string brain_mask;
  std::string wm_atlas;
  std::string gm_atlas;
  std::string labels;
  std::vector<std::string> lesion_gt;
  std::string out;
  int threads = 0;
  std::uint64_t seed = 42;
  double k_sigma = 3.0;
  int bins = 256;
  int net_radius = 10;
  int theta_step = 60;
};

void add_stage_options(CLI::App* sub, CliValues& v) {
  sub->add_option("--config", v.config, "JSON configuration file");
  sub->add_option("--flair", v.flair, "input FLAIR volume (NIfTI)");
  sub->add_option("--t1", v.t1, "optional T1 volume for clustering");
  sub->add_option("--brain-mask", v.brain_mask, "brain mask volume");
  sub->add_option("--wm-atlas", v.wm_atlas, "white-matter probability atlas");
  sub->add_option("--gm-atlas", v.gm_atlas, "gray-matter probability atlas");
  sub->add_option("--lesion-gt", v.lesion_gt,
                  "lesion ground-truth mask (repeat per expert)");
  sub->add_option("--labels", v.labels, "precomputed tissue label volume");
  sub->add_option("--out", v.out, "output directory");
  sub->add_option("--threads", v.threads, "worker threads (0 = all cores)");
  sub->add_option("--seed", v.seed, "random seed for clustering");
  sub->add_option("--k-sigma", v.k_sigma, "WM expansion threshold multiplier");
  sub->add_option("--bins", v.bins, "intensity histogram bin count");
  sub->add_option("--net-radius", v.net_radius, "point net radius (voxels)");
  sub->add_option("--theta-step", v.theta_step, "point net angle step (deg)");
}

flairhi::PipelineConfig build_config(const CLI::App* sub, const CliValues& v) {
  flairhi::PipelineConfig cfg;
  if (sub->count("--config"))
    cfg = flairhi::PipelineConfig::from_json_file(v.config);
  if (sub->count("--flair"))
    cfg.inputs.flair = v.flair;
  if (sub->count("--t1"))
    cfg.inputs.t1 = v.t1;
  if (sub->count("--brain-mask"))
    cfg.inputs.brain_mask = v.brain_mask;
  if (sub->count("--wm-atlas"))
    cfg.inputs.wm_atlas = v.wm_atlas;
  if (sub->count("--gm-atlas"))
    cfg.inputs.gm_atlas = v.gm_atlas;
  if (sub->count("--lesion-gt"))
    cfg.inputs.lesion_gt = v.lesion_gt;
  if (sub->count("--labels"))
    cfg.inputs.labels = v.labels;
  if (sub->count("--out"))
    cfg.out_dir = v.out;
  if (sub->count("--threads"))
    cfg.threads = v.threads;
  if (sub->count("--seed"))
    cfg.seed = v.seed;
  if (sub->count("--k-sigma"))
    cfg.wm.k_sigma = v.k_sigma;
  if (sub->count("--bins"))
    cfg.bin_count = v.bins;
  if (sub->count("--net-radius"))
    cfg.net_radius = v.net_radius;
  if (sub->count("--theta-step"))
    cfg.theta_step_deg = v.theta_step;
  return cfg;
}

int run_phantom(const std::string& preset, const std::string& spec_path,
                const std::string& out_dir) {
  flairhi::PhantomSpec spec = preset == "full"
                                  ? flairhi::PhantomSpec::full_scale()
                                  : flairhi::PhantomSpec::desk_default();
  if (!spec_path.empty())
    spec = flairhi::PhantomSpec::from_json_file(spec_path);
  spec.validate();
  const flairhi::Phantom phantom = flairhi::generate_phantom(spec);
  flairhi::write_phantom(phantom, spec, out_dir);
  std::cerr << "[phantom] wrote " << out_dir << " (" << spec.dims[0] << "x"
            << spec.dims[1] << "x" << spec.dims[2] << ", "
            << phantom.brain_mask.count() << " brain voxels)\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"flairhi: hyperintensity enhancement for FLAIR MRI volumes"};
  app.require_subcommand(1);

  std::string ph_preset = "desk", ph_spec, ph_out = "phantom";
  CLI::App* phantom_cmd =
      app.add_subcommand("phantom", "generate a synthetic brain phantom");
  phantom_cmd->add_option("--preset", ph_preset, "desk (64x64x48) or full (181x217x181)")
      ->check(CLI::IsMember({"desk", "full"}));
  phantom_cmd->add_option("--spec", ph_spec, "phantom spec JSON (overrides preset)");
  phantom_cmd->add_option("--out", ph_out, "output directory");

  CliValues values;
  struct StageCommand {
    const char* name;
    const char* help;
    flairhi::Stage last;
    CLI::App* sub = nullptr;
  };
  StageCommand commands[] = {
      {"denoise", "non-local means denoising", flairhi::Stage::Denoise},
      {"normalize", "intensity normalization", flairhi::Stage::Normalize},
      {"intermediate", "gradient-weighted histogram remapping",
       flairhi::Stage::Intermediate},
      {"himap", "hyperintensity score map", flairhi::Stage::HiMap},
      {"wm-estimate", "clustering and white-matter mask expansion",
       flairhi::Stage::WmEstimate},
      {"metrics", "IPD / DSC / LI report", flairhi::Stage::Metrics},
      {"pipeline", "run every stage including overlays",
       flairhi::Stage::Overlays},
  };
  for (StageCommand& cmd : commands) {
    cmd.sub = app.add_subcommand(cmd.name, cmd.help);
    add_stage_options(cmd.sub, values);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (phantom_cmd->parsed())
      return run_phantom(ph_preset, ph_spec, ph_out);
    for (const StageCommand& cmd : commands)
      if (cmd.sub->parsed()) {
        const flairhi::PipelineConfig cfg = build_config(cmd.sub, values);
        return flairhi::run_pipeline(cfg, cmd.last);
      }
  } catch (const flairhi::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
