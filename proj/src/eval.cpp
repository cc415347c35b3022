#include "vpr/eval.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vpr/error.hpp"
#include "vpr/parallel.hpp"

namespace vpr {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

int resolve_threads(int threads) { return threads > 0 ? threads : thread_count(); }

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

GroundTruth load_ground_truth(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorCode::MissingGroundTruth, "cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingGroundTruth, csv.string() + " is empty");
  if (trim(line) != "query_id,relevant_db_id") {
    throw Error(ErrorCode::ParseError, csv.string() + ": expected header 'query_id,relevant_db_id'");
  }
  GroundTruth gt;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::ParseError, csv.string() + ":" + std::to_string(line_no) + ": expected two fields");
    }
    gt[trim(line.substr(0, comma))].insert(trim(line.substr(comma + 1)));
  }
  return gt;
}

double anr(std::span<const int> ranks, int database_size) {
  if (ranks.empty()) throw Error(ErrorCode::EmptyInput, "no ranks");
  if (database_size < 1) throw Error(ErrorCode::InvalidParams, "database size must be positive");
  // Integer rank sum and one division, so whole-number results stay exact.
  long long sum = 0;
  for (int r : ranks) {
    if (r < 1 || r > database_size) {
      throw Error(ErrorCode::RankOutOfBounds, std::to_string(r) + " outside [1, " + std::to_string(database_size) + "]");
    }
    sum += r;
  }
  return 100.0 * static_cast<double>(sum) / (static_cast<double>(ranks.size()) * database_size);
}

int rank_of_ground_truth(std::span<const std::string> ranked_ids, const std::set<std::string>& relevant) {
  if (relevant.empty()) throw Error(ErrorCode::EmptyInput, "no relevant ids");
  std::size_t found = 0;
  int best = 0;
  for (std::size_t pos = 0; pos < ranked_ids.size(); ++pos) {
    if (relevant.contains(ranked_ids[pos])) {
      if (best == 0) best = static_cast<int>(pos) + 1;
      ++found;
    }
  }
  if (found != relevant.size()) {
    throw Error(ErrorCode::RelevantNotInDatabase, "relevant image missing from the ranked database");
  }
  return best;
}

int rank_of_ground_truth(const RetrievalResult& result, const std::set<std::string>& relevant) {
  std::vector<std::string> ids;
  ids.reserve(result.ranked.size());
  for (const ScoredImage& s : result.ranked) ids.push_back(s.db_id);
  return rank_of_ground_truth(ids, relevant);
}

std::vector<NamedImage> list_images(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingDataset, dir.string() + " is not a directory");
  std::vector<NamedImage> images;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".ppm" || ext == ".pgm") images.push_back({entry.path().stem().string(), entry.path()});
  }
  std::sort(images.begin(), images.end(), [](const NamedImage& a, const NamedImage& b) { return a.path < b.path; });
  return images;
}

std::vector<BaselineRanking> global_vlad_baseline(std::span<const ParsedScene> queries,
                                                  std::span<const ParsedScene> database, const Codebook& cb) {
  std::vector<VladCode> db_codes;
  db_codes.reserve(database.size());
  for (const ParsedScene& s : database) db_codes.push_back(vlad_encode(s.features.descriptors, cb));

  std::vector<BaselineRanking> out;
  out.reserve(queries.size());
  for (const ParsedScene& q : queries) {
    const VladCode code = vlad_encode(q.features.descriptors, cb);
    std::vector<double> dist(database.size());
    for (std::size_t j = 0; j < database.size(); ++j) dist[j] = vlad_distance(code, db_codes[j]);
    std::vector<std::size_t> order(database.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return database[a].image_id < database[b].image_id;
    });
    BaselineRanking r{q.image_id, {}, {}};
    for (std::size_t j : order) {
      r.ranked_ids.push_back(database[j].image_id);
      r.distances.push_back(dist[j]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<FeatureSet> extract_features(std::span<const NamedImage> images, const PipelineConfig& cfg) {
  std::vector<FeatureSet> out(images.size());
  parallel_for(
      images.size(), [&](std::size_t i) { out[i] = detect_and_describe(to_grayscale(load_image(images[i].path)), cfg.parse.sift); },
      resolve_threads(cfg.threads));
  return out;
}

DescriptorMatrix stack_descriptors(std::span<const FeatureSet> features) {
  Eigen::Index rows = 0;
  for (const FeatureSet& f : features) rows += f.descriptors.rows();
  DescriptorMatrix all(rows, kDescriptorDim);
  Eigen::Index at = 0;
  for (const FeatureSet& f : features) {
    all.middleRows(at, f.descriptors.rows()) = f.descriptors;
    at += f.descriptors.rows();
  }
  return all;
}

namespace {

std::vector<ParsedScene> parse_with_features(std::span<const NamedImage> images, std::vector<FeatureSet> features,
                                             const PipelineConfig& cfg, const Codebook& cb) {
  std::vector<ParsedScene> out(images.size());
  parallel_for(
      images.size(),
      [&](std::size_t i) {
        out[i] = parse_scene_lenient(load_image(images[i].path), std::move(features[i]), cfg.parse, cb, images[i].id);
      },
      resolve_threads(cfg.threads));
  return out;
}

}  // namespace

std::vector<ParsedScene> parse_images(std::span<const NamedImage> images, const PipelineConfig& cfg, const Codebook& cb) {
  return parse_with_features(images, extract_features(images, cfg), cfg, cb);
}

std::vector<SceneDescriptor> describe_all(std::span<const ParsedScene> scenes, const LandmarkLibrary& library,
                                          int count, int threads) {
  std::vector<SceneDescriptor> out(scenes.size());
  parallel_for(
      scenes.size(),
      [&](std::size_t i) {
        if (scenes[i].landmarks.empty()) {
          out[i] = SceneDescriptor{scenes[i].image_id, {}};
        } else {
          out[i] = describe_scene(scenes[i], library, count);
        }
      },
      resolve_threads(threads));
  return out;
}

PreparedExperiment prepare_experiment(const DatasetPaths& paths, const PipelineConfig& cfg, int max_l) {
  const auto start = Clock::now();
  const std::vector<NamedImage> lib_images = list_images(paths.library_dir);
  const std::vector<NamedImage> db_images = list_images(paths.database_dir);
  const std::vector<NamedImage> q_images = list_images(paths.query_dir);
  if (lib_images.empty() || db_images.empty() || q_images.empty()) {
    throw Error(ErrorCode::MissingDataset, "library, database and query directories must all contain images");
  }

  PreparedExperiment prep;
  prep.max_l = max_l;
  std::vector<FeatureSet> lib_features = extract_features(lib_images, cfg);
  prep.codebook = train_codebook(stack_descriptors(lib_features), cfg.codebook_k, cfg.seed);
  prep.library = parse_with_features(lib_images, std::move(lib_features), cfg, prep.codebook);
  prep.database = parse_images(db_images, cfg, prep.codebook);
  prep.queries = parse_images(q_images, cfg, prep.codebook);

  const LandmarkLibrary library(prep.library);
  prep.database_descriptors = describe_all(prep.database, library, max_l, cfg.threads);
  prep.query_descriptors = describe_all(prep.queries, library, max_l, cfg.threads);
  prep.prepare_ms = elapsed_ms(start);
  return prep;
}

namespace {

ReportRow make_row(std::string method, const std::vector<int>& ranks, int db_size, std::uint64_t seed,
                   Clock::time_point start) {
  ReportRow row;
  row.method = std::move(method);
  row.ranks = ranks;
  row.n_queries = static_cast<int>(ranks.size());
  row.db_size = db_size;
  row.seed = seed;
  row.anr_percent = anr(ranks, db_size);
  row.wall_ms = elapsed_ms(start);
  return row;
}

const std::set<std::string>& relevant_for(const GroundTruth& gt, const std::string& query_id) {
  static const std::set<std::string> none;
  auto it = gt.find(query_id);
  return it == gt.end() ? none : it->second;
}

}  // namespace

ReportRow evaluate_ip(const PreparedExperiment& prep, const GroundTruth& gt, int l, bool use_bb, OverlapMode mode,
                      std::uint64_t seed) {
  const auto start = Clock::now();
  if (l < 1 || l > prep.max_l) throw Error(ErrorCode::InvalidParams, "L outside the prepared range");
  std::vector<SceneDescriptor> db;
  db.reserve(prep.database_descriptors.size());
  for (const SceneDescriptor& d : prep.database_descriptors) db.push_back(d.truncated(l));
  std::vector<std::string> library_ids;
  for (const ParsedScene& s : prep.library) library_ids.push_back(s.image_id);
  const InvertedFile index = build_inverted_file(db, library_ids);

  std::vector<int> ranks;
  for (const SceneDescriptor& q : prep.query_descriptors) {
    const auto& relevant = relevant_for(gt, q.image_id);
    if (relevant.empty()) continue;
    ranks.push_back(rank_of_ground_truth(query(index, q.truncated(l), use_bb, mode), relevant));
  }
  ReportRow row = make_row("ip", ranks, static_cast<int>(db.size()), seed, start);
  row.l = l;
  row.use_bb = use_bb;
  row.overlap_mode = std::string(to_string(mode));
  return row;
}

ReportRow evaluate_global_vlad(const PreparedExperiment& prep, const GroundTruth& gt, std::uint64_t seed) {
  const auto start = Clock::now();
  std::vector<int> ranks;
  for (const BaselineRanking& r : global_vlad_baseline(prep.queries, prep.database, prep.codebook)) {
    const auto& relevant = relevant_for(gt, r.query_id);
    if (!relevant.empty()) ranks.push_back(rank_of_ground_truth(r.ranked_ids, relevant));
  }
  return make_row("vlad", ranks, static_cast<int>(prep.database.size()), seed, start);
}

ReportRow evaluate_shuffled(const PreparedExperiment& prep, const GroundTruth& gt, std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  std::vector<std::string> ids;
  for (const ParsedScene& s : prep.database) ids.push_back(s.image_id);
  std::vector<int> ranks;
  for (const ParsedScene& q : prep.queries) {
    const auto& relevant = relevant_for(gt, q.image_id);
    if (relevant.empty()) continue;
    std::vector<std::string> shuffled = ids;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    ranks.push_back(rank_of_ground_truth(shuffled, relevant));
  }
  return make_row("shuffled", ranks, static_cast<int>(ids.size()), seed, start);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  for (const fs::path& dir : {cfg.paths.library_dir, cfg.paths.database_dir, cfg.paths.query_dir}) {
    if (dir.empty() || !fs::is_directory(dir)) throw Error(ErrorCode::MissingDataset, "missing directory '" + dir.string() + "'");
  }
  if (cfg.ground_truth.empty() || !fs::exists(cfg.ground_truth)) {
    throw Error(ErrorCode::MissingGroundTruth, "missing ground truth '" + cfg.ground_truth.string() + "'");
  }
  if (cfg.ls.empty()) throw Error(ErrorCode::InvalidParams, "at least one L value required");
  const GroundTruth gt = load_ground_truth(cfg.ground_truth);
  const int max_l = *std::max_element(cfg.ls.begin(), cfg.ls.end());

  const PreparedExperiment prep = prepare_experiment(cfg.paths, cfg.pipeline, max_l);
  std::set<std::string> db_ids;
  for (const ParsedScene& s : prep.database) db_ids.insert(s.image_id);
  for (const auto& [qid, relevant] : gt) {
    if (relevant.empty()) throw Error(ErrorCode::InvalidParams, "query " + qid + " has no relevant image");
    for (const std::string& id : relevant) {
      if (!db_ids.contains(id)) throw Error(ErrorCode::RelevantNotInDatabase, id + " (relevant to " + qid + ")");
    }
  }

  ExperimentReport report;
  report.prepare_ms = prep.prepare_ms;
  for (int l : cfg.ls) {
    for (bool bb : cfg.bb_settings) {
      report.rows.push_back(evaluate_ip(prep, gt, l, bb, cfg.overlap_mode, cfg.pipeline.seed));
    }
  }
  if (cfg.include_baselines) {
    report.rows.push_back(evaluate_global_vlad(prep, gt, cfg.pipeline.seed));
    report.rows.push_back(evaluate_shuffled(prep, gt, cfg.pipeline.seed));
  }
  return report;
}

void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_report_csv(report, out);
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << "method,L,use_bb,overlap_mode,anr_percent,n_queries,db_size,seed,wall_ms\n";
  out << std::fixed;
  for (const ReportRow& r : report.rows) {
    out << r.method << ',' << r.l << ',' << (r.use_bb ? "true" : "false") << ',' << r.overlap_mode << ','
        << std::setprecision(4) << r.anr_percent << ',' << r.n_queries << ',' << r.db_size << ',' << r.seed << ','
        << std::setprecision(1) << r.wall_ms << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

void write_report_json(const ExperimentReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["anr_normalization"] = "100 * mean(rank / N), rank 1-based, N = database size";
  j["prepare_ms"] = report.prepare_ms;
  j["rows"] = nlohmann::json::array();
  for (const ReportRow& r : report.rows) {
    j["rows"].push_back({{"method", r.method},
                         {"L", r.l},
                         {"use_bb", r.use_bb},
                         {"overlap_mode", r.overlap_mode},
                         {"anr_percent", r.anr_percent},
                         {"n_queries", r.n_queries},
                         {"db_size", r.db_size},
                         {"seed", r.seed},
                         {"wall_ms", r.wall_ms},
                         {"per_query_ranks", r.ranks}});
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace vpr
