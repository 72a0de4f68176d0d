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

#ifndef FLAIRHI_PIPELINE_HPP
#define FLAIRHI_PIPELINE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flairhi/preprocess.hpp"
#include "flairhi/wmmask.hpp"

namespace flairhi {

/// 64-bit FNV-1a over a byte range; `seed` allows chaining.
std::uint64_t fnv1a(const void* data, std::size_t n,
                    std::uint64_t seed = 14695981039346656037ull);

/// Hex digest of fnv1a over a string.
std::string fnv1a_hex(const std::string& text);

/// Content hash of a file (streamed). Throws IoError when unreadable.
std::string hash_file(const std::string& path);

struct PipelineInputs {
  std::string flair;
  std::string t1;
  std::string brain_mask; // empty: derived from nonzero FLAIR voxels
  std::string wm_atlas;
  std::string gm_atlas;
  std::string labels; // optional precomputed label volume
  std::vector<std::string> lesion_gt;
};

struct OverlayConfig {
  bool enabled = true;
  int slice = -1; // -1: middle axial slice
};

struct PipelineConfig {
  PipelineInputs inputs;
  std::string out_dir = "out";
  int threads = 0; // 0: all hardware threads
  std::uint64_t seed = 42;

  NlmParams nlm;
  int bin_count = 256;
  int net_radius = 10;
  int theta_step_deg = 60;
  int neighborhood_radius = 1;
  int kmeans_k = 3;
  WmEstimationConfig wm;
  OverlayConfig overlays;

  static PipelineConfig from_json(const std::string& text);
  static PipelineConfig from_json_file(const std::string& path);
  std::string to_json() const;

  /// Throws ConfigError on invalid parameter combinations.
  void validate() const;

  /// Digest of every parameter that influences computed values (paths,
  /// out_dir and threads excluded: content is hashed per stage, and thread
  /// count must not change results).
  std::string param_hash() const;
};

/// Pipeline stages in execution order. Running a stage implies running every
/// stage before it, subject to stamp-based reuse.
enum class Stage {
  Denoise = 0,
  Normalize,
  Sobel,
  Intermediate,
  HiMap,
  WmEstimate,
  Metrics,
  Overlays,
};

const char* stage_name(Stage stage);

/// Executes stages Denoise..last, reusing any stage whose stamp hash matches
/// and whose outputs exist. Returns 0 on success, 2 on validation failures
/// (missing inputs, bad config), 1 when a stage fails. Log output goes to
/// `log` (stderr when null).
int run_pipeline(const PipelineConfig& cfg, Stage last = Stage::Overlays,
                 std::ostream* log = nullptr);

} // namespace flairhi

#endif // FLAIRHI_PIPELINE_HPP
