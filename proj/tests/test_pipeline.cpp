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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "flairhi/nifti.hpp"
#include "flairhi/phantom.hpp"
#include "flairhi/pipeline.hpp"
#include "flairhi/png_io.hpp"

using namespace flairhi;
namespace fs = std::filesystem;

namespace {

fs::path test_root() {
  const fs::path dir = fs::temp_directory_path() / "flairhi_pipeline_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

/// Writes (once per process) a small phantom the pipeline cases share. The
/// brain must comfortably exceed the point-net radius used by the configs
/// below, or the nets collapse to a single point per slice.
const fs::path& shared_phantom_dir() {
  static const fs::path dir = [] {
    const fs::path d = test_root() / "phantom";
    PhantomSpec spec;
    spec.dims = {32, 32, 26};
    spec.brain_axes = {13.0, 13.0, 10.0};
    spec.lesions = {{{16.0, 16.0, 13.0}, 3.0, 500.0}};
    spec.seed = 902;
    write_phantom(generate_phantom(spec), spec, d.string());
    return d;
  }();
  return dir;
}

PipelineConfig phantom_config(const std::string& out_dir) {
  const fs::path& ph = shared_phantom_dir();
  PipelineConfig cfg;
  cfg.inputs.flair = (ph / "flair.nii").string();
  cfg.inputs.brain_mask = (ph / "brain_mask.nii").string();
  cfg.inputs.wm_atlas = (ph / "wm_atlas.nii").string();
  cfg.inputs.gm_atlas = (ph / "gm_atlas.nii").string();
  cfg.inputs.lesion_gt = {(ph / "lesion_truth.nii").string()};
  cfg.out_dir = out_dir;
  cfg.threads = 1;
  cfg.net_radius = 4;
  cfg.theta_step_deg = 90;
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FLAIRHI_BIN) + " " + args +
                          " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

} // namespace

TEST_CASE("fnv1a reproduces the published test vectors") {
  CHECK(fnv1a("", 0) == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a", 1) == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar", 6) == 0x85944171f73967e8ull);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");

  // Chaining: hashing "ab" equals hashing "b" seeded with the hash of "a".
  CHECK(fnv1a("b", 1, fnv1a("a", 1)) == fnv1a("ab", 2));
}

TEST_CASE("hash_file digests the content") {
  const fs::path path = test_root() / "hashed.txt";
  std::ofstream(path, std::ios::binary) << "foobar";
  CHECK(hash_file(path.string()) == "85944171f73967e8");
  CHECK_THROWS_AS(hash_file((test_root() / "missing.txt").string()), IoError);
}

TEST_CASE("pipeline config round-trips through JSON") {
  PipelineConfig cfg;
  cfg.inputs.flair = "a.nii";
  cfg.inputs.t1 = "b.nii";
  cfg.inputs.brain_mask = "c.nii";
  cfg.inputs.wm_atlas = "d.nii";
  cfg.inputs.gm_atlas = "e.nii";
  cfg.inputs.labels = "f.nii";
  cfg.inputs.lesion_gt = {"g1.nii", "g2.nii"};
  cfg.out_dir = "results";
  cfg.threads = 3;
  cfg.seed = 1234;
  cfg.nlm.sigma = 12.5;
  cfg.nlm.patch_radius = 2;
  cfg.nlm.search_radius = 4;
  cfg.nlm.filter_h = 13.5;
  cfg.bin_count = 128;
  cfg.net_radius = 8;
  cfg.theta_step_deg = 45;
  cfg.neighborhood_radius = 2;
  cfg.kmeans_k = 4;
  cfg.wm.k_sigma = 1.5;
  cfg.wm.neighborhood_radius = 2;
  cfg.wm.iterate_to_fixpoint = true;
  cfg.overlays.enabled = false;
  cfg.overlays.slice = 17;

  const PipelineConfig back = PipelineConfig::from_json(cfg.to_json());
  CHECK(back.inputs.flair == cfg.inputs.flair);
  CHECK(back.inputs.t1 == cfg.inputs.t1);
  CHECK(back.inputs.brain_mask == cfg.inputs.brain_mask);
  CHECK(back.inputs.wm_atlas == cfg.inputs.wm_atlas);
  CHECK(back.inputs.gm_atlas == cfg.inputs.gm_atlas);
  CHECK(back.inputs.labels == cfg.inputs.labels);
  CHECK(back.inputs.lesion_gt == cfg.inputs.lesion_gt);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.threads == cfg.threads);
  CHECK(back.seed == cfg.seed);
  CHECK(back.nlm.sigma == cfg.nlm.sigma);
  CHECK(back.nlm.patch_radius == cfg.nlm.patch_radius);
  CHECK(back.nlm.search_radius == cfg.nlm.search_radius);
  CHECK(back.nlm.filter_h == cfg.nlm.filter_h);
  CHECK(back.bin_count == cfg.bin_count);
  CHECK(back.net_radius == cfg.net_radius);
  CHECK(back.theta_step_deg == cfg.theta_step_deg);
  CHECK(back.neighborhood_radius == cfg.neighborhood_radius);
  CHECK(back.kmeans_k == cfg.kmeans_k);
  CHECK(back.wm.k_sigma == cfg.wm.k_sigma);
  CHECK(back.wm.neighborhood_radius == cfg.wm.neighborhood_radius);
  CHECK(back.wm.iterate_to_fixpoint == cfg.wm.iterate_to_fixpoint);
  CHECK(back.overlays.enabled == cfg.overlays.enabled);
  CHECK(back.overlays.slice == cfg.overlays.slice);

  CHECK_THROWS_AS(PipelineConfig::from_json("not json"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json_file("/no/such/config.json"),
                  IoError);
}

TEST_CASE("pipeline config validation") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  PipelineConfig bad = cfg;
  bad.bin_count = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.net_radius = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.theta_step_deg = 7;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.kmeans_k = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.threads = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.wm.k_sigma = -0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.out_dir.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("param_hash tracks parameters, not paths or threads") {
  PipelineConfig cfg;
  cfg.inputs.flair = "a.nii";
  const std::string base = cfg.param_hash();

  PipelineConfig same = cfg;
  same.inputs.flair = "elsewhere.nii";
  same.out_dir = "other_dir";
  same.threads = 16;
  CHECK(same.param_hash() == base);

  PipelineConfig changed = cfg;
  changed.bin_count = 128;
  CHECK(changed.param_hash() != base);
  changed = cfg;
  changed.seed = 1;
  CHECK(changed.param_hash() != base);
  changed = cfg;
  changed.wm.k_sigma = 0.5;
  CHECK(changed.param_hash() != base);
  changed = cfg;
  changed.nlm.sigma = 1.0;
  CHECK(changed.param_hash() != base);
}

TEST_CASE("run_pipeline rejects missing inputs with exit code 2") {
  std::ostringstream log;

  PipelineConfig empty;
  empty.out_dir = (test_root() / "never_created").string();
  CHECK(run_pipeline(empty, Stage::Overlays, &log) == 2);
  CHECK(log.str().find("--flair") != std::string::npos);
  CHECK_FALSE(fs::exists(empty.out_dir));

  log.str("");
  PipelineConfig missing = phantom_config((test_root() / "out_missing").string());
  missing.inputs.flair = (test_root() / "nope.nii").string();
  CHECK(run_pipeline(missing, Stage::Overlays, &log) == 2);
  CHECK(log.str().find("file not found") != std::string::npos);

  log.str("");
  PipelineConfig no_atlas = phantom_config((test_root() / "out_na").string());
  no_atlas.inputs.wm_atlas.clear();
  CHECK(run_pipeline(no_atlas, Stage::WmEstimate, &log) == 2);
  CHECK(log.str().find("--wm-atlas") != std::string::npos);

  // The atlas is only required from the wm_estimate stage onward.
  log.str("");
  PipelineConfig early = phantom_config((test_root() / "out_early").string());
  early.inputs.wm_atlas.clear();
  early.inputs.gm_atlas.clear();
  early.inputs.lesion_gt.clear();
  CHECK(run_pipeline(early, Stage::Intermediate, &log) == 0);
  CHECK(fs::exists(fs::path(early.out_dir) / "intermediate.nii"));
  CHECK_FALSE(fs::exists(fs::path(early.out_dir) / "hi_map.nii"));

  log.str("");
  PipelineConfig invalid = phantom_config((test_root() / "out_inv").string());
  invalid.bin_count = 0;
  CHECK(run_pipeline(invalid, Stage::Overlays, &log) == 2);
  CHECK(log.str().find("[config] error") != std::string::npos);
}

TEST_CASE("pipeline runs end to end, stamps make reruns no-ops") {
  const fs::path out = test_root() / "out_main";
  fs::remove_all(out);
  PipelineConfig cfg = phantom_config(out.string());

  std::ostringstream log1;
  REQUIRE(run_pipeline(cfg, Stage::Overlays, &log1) == 0);

  for (const char* name :
       {"denoised.nii", "normalized.nii", "sobel.nii", "intermediate.nii",
        "hi_map.nii", "labels.nii", "wm_initial.nii", "wm_estimated.nii",
        "metrics.json", "overlay_flair.png", "overlay_hi.png",
        "overlay_wm.png", "pipeline_config.json"})
    CHECK(fs::exists(out / name));
  CHECK(count_occurrences(log1.str(), "] done in") == 8);
  CHECK(log1.str().find("voxels/s") != std::string::npos);

  // PNG signature on the overlays.
  const std::string png = slurp(out / "overlay_flair.png");
  REQUIRE(png.size() > 8);
  CHECK(png.compare(0, 8, "\x89PNG\r\n\x1a\n", 8) == 0);

  // The metrics document carries the configuration digest.
  const nlohmann::json metrics =
      nlohmann::json::parse(slurp(out / "metrics.json"));
  CHECK(metrics["config_hash"] == cfg.param_hash());
  REQUIRE(metrics.contains("images"));
  REQUIRE(metrics.contains("metrics"));
  CHECK(metrics["metrics"]["brightness"].size() >= 6);
  CHECK(metrics["metrics"]["masks"].size() == 2);

  // Second run: every stage is reused and no artifact changes.
  const std::string hi_before = slurp(out / "hi_map.nii");
  std::ostringstream log2;
  REQUIRE(run_pipeline(cfg, Stage::Overlays, &log2) == 0);
  CHECK(count_occurrences(log2.str(), "] reused") == 8);
  CHECK(count_occurrences(log2.str(), "] done in") == 0);
  CHECK(slurp(out / "hi_map.nii") == hi_before);

  // A parameter change downstream recomputes only the affected stages.
  PipelineConfig rebinned = cfg;
  rebinned.bin_count = 64;
  std::ostringstream log3;
  REQUIRE(run_pipeline(rebinned, Stage::Overlays, &log3) == 0);
  CHECK(log3.str().find("[denoise] reused") != std::string::npos);
  CHECK(log3.str().find("[normalize] reused") != std::string::npos);
  CHECK(log3.str().find("[intermediate] done in") != std::string::npos);
  CHECK(log3.str().find("[himap] done in") != std::string::npos);
}

TEST_CASE("pipeline outputs are identical across thread counts") {
  const fs::path out1 = test_root() / "out_t1";
  const fs::path out4 = test_root() / "out_t4";
  fs::remove_all(out1);
  fs::remove_all(out4);

  PipelineConfig cfg1 = phantom_config(out1.string());
  PipelineConfig cfg4 = phantom_config(out4.string());
  cfg4.threads = 4;

  std::ostringstream log;
  REQUIRE(run_pipeline(cfg1, Stage::Overlays, &log) == 0);
  REQUIRE(run_pipeline(cfg4, Stage::Overlays, &log) == 0);

  for (const char* name : {"denoised.nii", "normalized.nii", "sobel.nii",
                           "intermediate.nii", "hi_map.nii", "labels.nii",
                           "wm_initial.nii", "wm_estimated.nii",
                           "metrics.json"})
    CHECK(slurp(out1 / name) == slurp(out4 / name));
}

TEST_CASE("precomputed labels short-circuit the clustering") {
  const fs::path source = test_root() / "out_main"; // from the end-to-end case
  REQUIRE(fs::exists(source / "labels.nii"));

  const fs::path out = test_root() / "out_labels";
  fs::remove_all(out);
  PipelineConfig cfg = phantom_config(out.string());
  cfg.inputs.labels = (source / "labels.nii").string();

  std::ostringstream log;
  REQUIRE(run_pipeline(cfg, Stage::WmEstimate, &log) == 0);
  CHECK(slurp(out / "wm_initial.nii") == slurp(source / "wm_initial.nii"));
  CHECK(slurp(out / "wm_estimated.nii") == slurp(source / "wm_estimated.nii"));
}

TEST_CASE("a failing stage reports exit code 1") {
  // A labels volume holding a non-label value trips the wm_estimate stage.
  const fs::path bad_labels = test_root() / "bad_labels.nii";
  Volume3D labels({32, 32, 26}, 1.0);
  labels(16, 16, 13) = 300.0;
  nifti::write_volume(labels, bad_labels);

  const fs::path out = test_root() / "out_fail";
  fs::remove_all(out);
  PipelineConfig cfg = phantom_config(out.string());
  cfg.inputs.labels = bad_labels.string();

  std::ostringstream log;
  CHECK(run_pipeline(cfg, Stage::WmEstimate, &log) == 1);
  CHECK(log.str().find("[wm_estimate] error:") != std::string::npos);
}

TEST_CASE("render_overlay writes deterministic PNG bytes") {
  Volume3D vol({16, 12, 1});
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x)
      vol(x, y, 0) = x + 100.0 * y;
  BinaryMask mask({16, 12, 1});
  for (int y = 4; y < 8; ++y)
    for (int x = 5; x < 11; ++x)
      mask.set(x, y, 0, true);

  const fs::path a = test_root() / "overlay_a.png";
  const fs::path b = test_root() / "overlay_b.png";
  render_overlay(vol, mask, 0, a.string());
  render_overlay(vol, mask, 0, b.string());

  const std::string bytes = slurp(a);
  REQUIRE(bytes.size() > 8);
  CHECK(bytes.compare(0, 8, "\x89PNG\r\n\x1a\n", 8) == 0);
  CHECK(bytes == slurp(b));
}

TEST_CASE("command line interface") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("definitely-not-a-subcommand") != 0);
  CHECK(run_cli("phantom --preset nonsense") != 0);
  CHECK(run_cli("pipeline") == 2); // --flair missing

  const fs::path dir = test_root() / "cli";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // Generate a phantom from a spec file, then process it end to end.
  PhantomSpec spec;
  spec.dims = {32, 32, 26};
  spec.brain_axes = {13.0, 13.0, 10.0};
  spec.lesions = {{{16.0, 16.0, 13.0}, 3.0, 500.0}};
  spec.seed = 903;
  std::ofstream((dir / "spec.json")) << spec.to_json();

  const std::string ph = (dir / "phantom").string();
  CHECK(run_cli("phantom --spec " + (dir / "spec.json").string() + " --out " +
                ph) == 0);
  CHECK(fs::exists(dir / "phantom" / "flair.nii"));

  const std::string out = (dir / "out").string();
  CHECK(run_cli("pipeline --flair " + ph + "/flair.nii --brain-mask " + ph +
                "/brain_mask.nii --wm-atlas " + ph +
                "/wm_atlas.nii --gm-atlas " + ph +
                "/gm_atlas.nii --lesion-gt " + ph +
                "/lesion_truth.nii --out " + out +
                " --threads 1 --net-radius 4 --theta-step 90") == 0);
  CHECK(fs::exists(dir / "out" / "metrics.json"));

  // Single-stage subcommands stop early.
  const std::string out2 = (dir / "out2").string();
  CHECK(run_cli("intermediate --flair " + ph + "/flair.nii --brain-mask " +
                ph + "/brain_mask.nii --out " + out2 + " --threads 1") == 0);
  CHECK(fs::exists(dir / "out2" / "intermediate.nii"));
  CHECK_FALSE(fs::exists(dir / "out2" / "hi_map.nii"));
}
