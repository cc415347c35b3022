#include "vpr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vpr/error.hpp"
#include "vpr/retrieval.hpp"

namespace vpr {

namespace {

using nlohmann::json;

// Single list of keys so that reading and writing cannot drift apart.
template <typename Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("R", c.R);
  v("K", c.K);
  v("L", c.L);
  v("codebook_k", c.codebook_k);
  v("compactness", c.compactness);
  v("iterations", c.iterations);
  v("min_keypoints", c.min_keypoints);
  v("contrast_threshold", c.contrast_threshold);
  v("seed", c.seed);
  v("overlap_mode", c.overlap_mode);
  v("use_bb", c.use_bb);
  v("ls", c.ls);
  v("library_dir", c.library_dir);
  v("db_dir", c.db_dir);
  v("query_dir", c.query_dir);
  v("ground_truth", c.ground_truth);
  v("out", c.out);
  v("n_library", c.n_library);
  v("n_database", c.n_database);
  v("n_query", c.n_query);
  v("width", c.width);
  v("height", c.height);
  v("n_distractors", c.n_distractors);
}

}  // namespace

std::string config_to_json(const Config& cfg) {
  json j = json::object();
  Config copy = cfg;
  visit_fields(copy, [&](const char* key, const auto& value) { j[key] = value; });
  return j.dump(2);
}

Config config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");

  Config cfg;
  std::set<std::string> known;
  visit_fields(cfg, [&](const char* key, auto& value) {
    known.insert(key);
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(value);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("config key '") + key + "': " + e.what());
    }
  });
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorCode::UsageError, "unknown config key '" + key + "'");
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const Config& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << config_to_json(cfg) << '\n';
}

void validate(const Config& cfg) {
  auto positive = [](const char* name, long long v) {
    if (v <= 0) throw Error(ErrorCode::InvalidParams, std::string(name) + " must be positive");
  };
  positive("R", cfg.R);
  positive("K", cfg.K);
  positive("L", cfg.L);
  positive("codebook_k", cfg.codebook_k);
  positive("iterations", cfg.iterations);
  positive("min_keypoints", cfg.min_keypoints);
  positive("n_library", cfg.n_library);
  positive("n_database", cfg.n_database);
  positive("n_query", cfg.n_query);
  positive("width", cfg.width);
  positive("height", cfg.height);
  if (cfg.n_distractors < 0) throw Error(ErrorCode::InvalidParams, "n_distractors must not be negative");
  if (!(cfg.compactness > 0.0)) throw Error(ErrorCode::InvalidParams, "compactness must be positive");
  if (!(cfg.contrast_threshold > 0.0)) throw Error(ErrorCode::InvalidParams, "contrast_threshold must be positive");
  for (int l : cfg.ls) positive("ls entry", l);
  parse_overlap_mode(cfg.overlap_mode);
}

ParseConfig parse_config(const Config& cfg) {
  ParseConfig p;
  p.slic.target_count = cfg.R;
  p.slic.compactness = cfg.compactness;
  p.slic.iterations = cfg.iterations;
  p.landmarks = cfg.K;
  p.min_keypoints = cfg.min_keypoints;
  p.sift.contrast_threshold = cfg.contrast_threshold;
  return p;
}

PipelineConfig pipeline_config(const Config& cfg) {
  PipelineConfig p;
  p.parse = parse_config(cfg);
  p.codebook_k = cfg.codebook_k;
  p.seed = cfg.seed;
  return p;
}

SynthParams synth_params(const Config& cfg) {
  SynthParams p;
  p.n_library = cfg.n_library;
  p.n_database = cfg.n_database;
  p.n_query = cfg.n_query;
  p.width = cfg.width;
  p.height = cfg.height;
  p.n_distractors = cfg.n_distractors;
  return p;
}

DatasetPaths dataset_paths(const Config& cfg) { return {cfg.library_dir, cfg.db_dir, cfg.query_dir}; }

}  // namespace vpr
