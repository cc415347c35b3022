#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vpr/encoding.hpp"
#include "vpr/mining.hpp"
#include "vpr/retrieval.hpp"

namespace vpr {

/// query id -> relevant database ids.
using GroundTruth = std::map<std::string, std::set<std::string>>;

/// Reads "query_id,relevant_db_id" rows after a mandatory header row.
GroundTruth load_ground_truth(const std::filesystem::path& csv);

/// Averaged normalized rank in percent: 100 * mean(rank / N).
double anr(std::span<const int> ranks, int database_size);

/// Best (smallest) 1-based position of any relevant id.
int rank_of_ground_truth(std::span<const std::string> ranked_ids, const std::set<std::string>& relevant);
int rank_of_ground_truth(const RetrievalResult& result, const std::set<std::string>& relevant);

struct NamedImage {
  std::string id;  // file stem
  std::filesystem::path path;
};

/// PNG/PPM/PGM files of a directory sorted by file name.
std::vector<NamedImage> list_images(const std::filesystem::path& dir);

struct PipelineConfig {
  ParseConfig parse;
  int codebook_k = kDefaultCodebookSize;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = VPR_THREADS / hardware
};

/// Global VLAD of every image over all its descriptors; the database ranked
/// by ascending distance to the query code, ties by id.
struct BaselineRanking {
  std::string query_id;
  std::vector<std::string> ranked_ids;
  std::vector<double> distances;
};

std::vector<BaselineRanking> global_vlad_baseline(std::span<const ParsedScene> queries,
                                                  std::span<const ParsedScene> database, const Codebook& cb);

/// Extracts features for each image (in parallel) and parses it leniently.
std::vector<ParsedScene> parse_images(std::span<const NamedImage> images, const PipelineConfig& cfg, const Codebook& cb);
std::vector<FeatureSet> extract_features(std::span<const NamedImage> images, const PipelineConfig& cfg);
/// Stacks every descriptor of `features` for codebook training.
DescriptorMatrix stack_descriptors(std::span<const FeatureSet> features);

/// Scene descriptors of length `count`; an image without landmarks gets an
/// empty descriptor.
std::vector<SceneDescriptor> describe_all(std::span<const ParsedScene> scenes, const LandmarkLibrary& library,
                                          int count, int threads = 0);

/// Everything a set of retrieval configurations shares: the codebook, the
/// parsed library and the query/database descriptors at the largest L.
struct PreparedExperiment {
  Codebook codebook;
  std::vector<ParsedScene> library;
  std::vector<ParsedScene> database;
  std::vector<ParsedScene> queries;
  std::vector<SceneDescriptor> database_descriptors;
  std::vector<SceneDescriptor> query_descriptors;
  int max_l = 0;
  double prepare_ms = 0.0;
};

struct DatasetPaths {
  std::filesystem::path library_dir;
  std::filesystem::path database_dir;
  std::filesystem::path query_dir;
};

PreparedExperiment prepare_experiment(const DatasetPaths& paths, const PipelineConfig& cfg, int max_l);

struct ReportRow {
  std::string method;  // "ip", "vlad" or "shuffled"
  int l = 0;
  bool use_bb = false;
  std::string overlap_mode = "none";  // "iou", "intersection" or "none" for baselines
  double anr_percent = 0.0;
  int n_queries = 0;
  int db_size = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  std::vector<int> ranks;  // per query, in query id order
};

/// Index over the database descriptors truncated to `l`, then one query per
/// query descriptor.
ReportRow evaluate_ip(const PreparedExperiment& prep, const GroundTruth& gt, int l, bool use_bb, OverlapMode mode,
                      std::uint64_t seed);
ReportRow evaluate_global_vlad(const PreparedExperiment& prep, const GroundTruth& gt, std::uint64_t seed);
/// Seeded random permutation of the database per query.
ReportRow evaluate_shuffled(const PreparedExperiment& prep, const GroundTruth& gt, std::uint64_t seed);

struct ExperimentConfig {
  DatasetPaths paths;
  std::filesystem::path ground_truth;
  PipelineConfig pipeline;
  std::vector<int> ls{20};
  std::vector<bool> bb_settings{true};
  OverlapMode overlap_mode = OverlapMode::Iou;
  bool include_baselines = true;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  double prepare_ms = 0.0;
};

/// Rows are ordered: every L in the given order with every BB setting, then
/// the baselines.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path);
void write_report_csv(const ExperimentReport& report, std::ostream& out);
void write_report_json(const ExperimentReport& report, const std::filesystem::path& path);

}  // namespace vpr
