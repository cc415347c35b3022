#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vpr/eval.hpp"
#include "vpr/synth.hpp"

namespace vpr {

/// Flat run configuration. JSON keys are the member names.
struct Config {
  int R = 72;  // superpixel target
  int K = 40;  // landmarks per image
  int L = 20;  // descriptor length
  int codebook_k = kDefaultCodebookSize;
  double compactness = 10.0;
  int iterations = 10;
  int min_keypoints = 5;
  double contrast_threshold = 0.04 / 3.0;
  std::uint64_t seed = 0;
  std::string overlap_mode = "iou";
  bool use_bb = true;
  std::vector<int> ls;  // empty: {L} for eval, {10, 20, 30, 40, 50} for sweep

  std::string library_dir;
  std::string db_dir;
  std::string query_dir;
  std::string ground_truth;
  std::string out;

  int n_library = 100;
  int n_database = 100;
  int n_query = 50;
  int width = 160;
  int height = 120;
  int n_distractors = 1;

  friend bool operator==(const Config&, const Config&) = default;
};

/// Pretty-printed JSON with every key present.
std::string config_to_json(const Config& cfg);
/// Keys absent from `text` keep their defaults; unknown keys raise UsageError
/// and malformed values ParseError.
Config config_from_json(std::string_view text);
Config load_config(const std::filesystem::path& path);
void save_config(const Config& cfg, const std::filesystem::path& path);

/// Raises InvalidParams when a count is not positive or a value is out of range.
void validate(const Config& cfg);

ParseConfig parse_config(const Config& cfg);
PipelineConfig pipeline_config(const Config& cfg);
SynthParams synth_params(const Config& cfg);
DatasetPaths dataset_paths(const Config& cfg);

}  // namespace vpr
