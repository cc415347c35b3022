#include "vpr/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "vpr/config.hpp"
#include "vpr/error.hpp"
#include "vpr/eval.hpp"
#include "vpr/serialize.hpp"
#include "vpr/synth.hpp"

namespace vpr {

namespace {

namespace fs = std::filesystem;

const std::vector<int> kSweepLs{10, 20, 30, 40, 50};

[[noreturn]] void usage(const std::string& message) { throw Error(ErrorCode::UsageError, message); }

const std::string& required(const std::string& value, const char* flag, const char* command) {
  if (value.empty()) usage(std::string(command) + " requires " + flag);
  return value;
}

std::vector<std::string> image_ids(const fs::path& dir) {
  std::vector<std::string> ids;
  for (const NamedImage& img : list_images(dir)) ids.push_back(img.id);
  return ids;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

struct Extra {
  std::string config;
  std::string dump_config;
  std::string dataset;
  std::string codebook;
  std::string input_dir;
  std::string library_scenes;
  std::string scenes;
  std::string descriptors;
  std::string index;
  std::string id;
};

int run_synth(const Config& cfg, std::ostream& out) {
  const fs::path root = required(cfg.out, "--out", "synth");
  const SyntheticDataset ds = generate_synthetic_dataset(cfg.seed, synth_params(cfg), root);
  out << "wrote " << ds.library.size() << " library, " << ds.database.size() << " database and " << ds.queries.size()
      << " query images to " << root.string() << '\n';
  return 0;
}

int run_codebook(const Config& cfg, std::ostream& out) {
  const fs::path lib = required(cfg.library_dir, "--library-dir", "codebook");
  const fs::path dest = required(cfg.out, "--out", "codebook");
  const PipelineConfig pipeline = pipeline_config(cfg);
  const std::vector<NamedImage> images = list_images(lib);
  if (images.empty()) throw Error(ErrorCode::MissingDataset, "no images in " + lib.string());
  const DescriptorMatrix all = stack_descriptors(extract_features(images, pipeline));
  const Codebook cb = train_codebook(all, cfg.codebook_k, cfg.seed);
  ensure_parent(dest);
  save_codebook(cb, dest);
  out << "codebook k=" << cb.k() << " dim=" << cb.dim() << " from " << all.rows() << " descriptors -> "
      << dest.string() << '\n';
  return 0;
}

int run_parse(const Config& cfg, const Extra& x, std::ostream& out) {
  const fs::path input = x.input_dir.empty() ? required(cfg.library_dir, "--input-dir", "parse") : x.input_dir;
  const Codebook cb = load_codebook(required(x.codebook, "--codebook", "parse"));
  const fs::path dest = required(cfg.out, "--out", "parse");
  const std::vector<NamedImage> images = list_images(input);
  if (images.empty()) throw Error(ErrorCode::MissingDataset, "no images in " + input.string());
  const std::vector<ParsedScene> scenes = parse_images(images, pipeline_config(cfg), cb);
  ensure_parent(dest);
  save_scenes(scenes, dest);
  std::size_t landmarks = 0;
  for (const ParsedScene& s : scenes) landmarks += s.landmarks.size();
  out << "parsed " << scenes.size() << " images, " << landmarks << " landmarks -> " << dest.string() << '\n';
  return 0;
}

int run_describe(const Config& cfg, const Extra& x, std::ostream& out) {
  const std::vector<ParsedScene> library = load_scenes(required(x.library_scenes, "--library-scenes", "describe"));
  const std::vector<ParsedScene> scenes = load_scenes(required(x.scenes, "--scenes", "describe"));
  const fs::path dest = required(cfg.out, "--out", "describe");
  const std::vector<SceneDescriptor> descriptors = describe_all(scenes, LandmarkLibrary(library), cfg.L);
  ensure_parent(dest);
  save_descriptors(descriptors, dest);
  out << "described " << descriptors.size() << " images with L=" << cfg.L << " -> " << dest.string() << '\n';
  return 0;
}

int run_index(const Config& cfg, const Extra& x, std::ostream& out) {
  const std::vector<SceneDescriptor> db = load_descriptors(required(x.descriptors, "--descriptors", "index"));
  std::vector<std::string> library_ids;
  if (!x.library_scenes.empty()) {
    for (const ParsedScene& s : load_scenes(x.library_scenes)) library_ids.push_back(s.image_id);
  } else {
    library_ids = image_ids(required(cfg.library_dir, "--library-dir or --library-scenes", "index"));
  }
  const fs::path dest = required(cfg.out, "--out", "index");
  const InvertedFile index = build_inverted_file(db, library_ids);
  ensure_parent(dest);
  save_index(index, dest);
  out << "indexed " << index.database_ids().size() << " images, " << index.total_postings() << " postings -> "
      << dest.string() << '\n';
  return 0;
}

int run_query(const Config& cfg, const Extra& x, std::ostream& out) {
  const InvertedFile index = load_index(required(x.index, "--index", "query"));
  const std::vector<SceneDescriptor> queries = load_descriptors(required(x.descriptors, "--descriptors", "query"));
  if (queries.empty()) throw Error(ErrorCode::EmptyInput, "no query descriptors in " + x.descriptors);
  auto it = queries.begin();
  if (!x.id.empty()) {
    it = std::find_if(queries.begin(), queries.end(), [&](const SceneDescriptor& d) { return d.image_id == x.id; });
    if (it == queries.end()) throw Error(ErrorCode::InvalidParams, "no descriptor for query '" + x.id + "'");
  }
  const RetrievalResult result = query(index, *it, cfg.use_bb, parse_overlap_mode(cfg.overlap_mode));

  std::ostringstream table;
  table << "rank,db_id,common_count,bb_score\n" << std::setprecision(10);
  for (std::size_t r = 0; r < result.ranked.size(); ++r) {
    const ScoredImage& s = result.ranked[r];
    table << r + 1 << ',' << s.db_id << ',' << s.common_count << ',' << s.bb_score << '\n';
  }
  out << "# query " << it->image_id << '\n' << table.str();
  if (!cfg.out.empty()) {
    ensure_parent(cfg.out);
    std::ofstream file(cfg.out);
    if (!file) throw Error(ErrorCode::IoError, "cannot write " + cfg.out);
    file << table.str();
  }
  return 0;
}

int run_experiment_command(const Config& cfg, bool sweep, std::ostream& out) {
  const char* name = sweep ? "sweep" : "eval";
  required(cfg.ground_truth, "--ground-truth", name);
  ExperimentConfig ec;
  ec.paths = {required(cfg.library_dir, "--library-dir", name), required(cfg.db_dir, "--db-dir", name),
              required(cfg.query_dir, "--query-dir", name)};
  ec.ground_truth = cfg.ground_truth;
  ec.pipeline = pipeline_config(cfg);
  ec.overlap_mode = parse_overlap_mode(cfg.overlap_mode);
  if (sweep) {
    ec.ls = cfg.ls.empty() ? kSweepLs : cfg.ls;
    ec.bb_settings = {true, false};
    ec.include_baselines = false;
  } else {
    ec.ls = cfg.ls.empty() ? std::vector<int>{cfg.L} : cfg.ls;
    ec.bb_settings = {cfg.use_bb};
    ec.include_baselines = true;
  }
  const ExperimentReport report = run_experiment(ec);
  write_report_csv(report, out);
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    const std::string stem = sweep ? "sweep" : "report";
    write_report_csv(report, fs::path(cfg.out) / (stem + ".csv"));
    write_report_json(report, fs::path(cfg.out) / (stem + ".json"));
  }
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Landmark-based visual place recognition over a library of unposed images.", "vpr"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Config flags;
  Extra x;
  std::vector<std::pair<CLI::Option*, std::function<void(Config&)>>> overrides;
  auto bind = [&](CLI::Option* opt, auto member) {
    overrides.emplace_back(opt, [&flags, member](Config& c) { c.*member = flags.*member; });
    return opt;
  };

  app.add_option("--config", x.config, "JSON config; flags override its values");
  app.add_option("--dump-config", x.dump_config, "Write the effective config to this path and continue");
  bind(app.add_option("--seed", flags.seed, "Seed for every random choice"), &Config::seed);
  app.add_option("--dataset", x.dataset, "Dataset root holding library/, database/ and query/");
  bind(app.add_option("--library-dir", flags.library_dir, "Library images"), &Config::library_dir);
  bind(app.add_option("--db-dir", flags.db_dir, "Database images"), &Config::db_dir);
  bind(app.add_option("--query-dir", flags.query_dir, "Query images"), &Config::query_dir);
  bind(app.add_option("--out", flags.out, "Output file or directory"), &Config::out);
  bind(app.add_option("-R", flags.R, "Superpixel target count"), &Config::R);
  bind(app.add_option("-K", flags.K, "Landmarks per image"), &Config::K);
  bind(app.add_option("-L", flags.L, "Descriptor length"), &Config::L);
  bind(app.add_option("--codebook-k", flags.codebook_k, "VLAD codebook size"), &Config::codebook_k);
  bind(app.add_option("--compactness", flags.compactness, "SLIC compactness"), &Config::compactness);
  bind(app.add_option("--iterations", flags.iterations, "SLIC iterations"), &Config::iterations);
  bind(app.add_option("--min-keypoints", flags.min_keypoints, "Keypoints required per landmark"),
       &Config::min_keypoints);
  bind(app.add_option("--contrast-threshold", flags.contrast_threshold, "DoG contrast threshold"),
       &Config::contrast_threshold);
  auto* no_bb = app.add_flag("--no-bb", "Rank by common library ids only");
  overrides.emplace_back(no_bb, [](Config& c) { c.use_bb = false; });
  bind(app.add_option("--overlap-mode", flags.overlap_mode, "Bounding-box similarity")
           ->check(CLI::IsMember({"iou", "intersection"})),
       &Config::overlap_mode);
  bind(app.add_option("--ls", flags.ls, "Comma-separated L values")->delimiter(','), &Config::ls);
  bind(app.add_option("--ground-truth", flags.ground_truth, "Ground-truth CSV"), &Config::ground_truth);

  CLI::App* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset under --out");
  bind(synth->add_option("--n-library", flags.n_library), &Config::n_library);
  bind(synth->add_option("--n-database", flags.n_database), &Config::n_database);
  bind(synth->add_option("--n-query", flags.n_query), &Config::n_query);
  bind(synth->add_option("--width", flags.width), &Config::width);
  bind(synth->add_option("--height", flags.height), &Config::height);
  bind(synth->add_option("--n-distractors", flags.n_distractors), &Config::n_distractors);

  app.add_subcommand("codebook", "Train the VLAD codebook over library features");
  CLI::App* parse = app.add_subcommand("parse", "Parse an image set into landmarks (JSON lines)");
  parse->add_option("--input-dir", x.input_dir, "Images to parse (defaults to --library-dir)");
  parse->add_option("--codebook", x.codebook, "Codebook JSON");
  CLI::App* describe = app.add_subcommand("describe", "Build L-entry scene descriptors");
  describe->add_option("--library-scenes", x.library_scenes, "Parsed library scenes");
  describe->add_option("--scenes", x.scenes, "Parsed scenes to describe");
  CLI::App* index = app.add_subcommand("index", "Build the inverted file over database descriptors");
  index->add_option("--descriptors", x.descriptors, "Database descriptors");
  index->add_option("--library-scenes", x.library_scenes, "Parsed library scenes (for the library ids)");
  CLI::App* query_cmd = app.add_subcommand("query", "Rank the database for one query descriptor");
  query_cmd->add_option("--index", x.index, "Inverted file JSON");
  query_cmd->add_option("--descriptors", x.descriptors, "Query descriptors");
  query_cmd->add_option("--id", x.id, "Query image id (defaults to the first descriptor)");
  app.add_subcommand("eval", "Run the evaluation with baselines");
  app.add_subcommand("sweep", "L sweep crossed with BB on/off");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    Config cfg = x.config.empty() ? Config{} : load_config(x.config);
    if (!x.dataset.empty()) {
      const fs::path root = x.dataset;
      cfg.library_dir = (root / "library").string();
      cfg.db_dir = (root / "database").string();
      cfg.query_dir = (root / "query").string();
    }
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(cfg);
    }
    validate(cfg);
    if (!x.dump_config.empty()) {
      ensure_parent(x.dump_config);
      save_config(cfg, x.dump_config);
    }

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "synth") return run_synth(cfg, out);
    if (command == "codebook") return run_codebook(cfg, out);
    if (command == "parse") return run_parse(cfg, x, out);
    if (command == "describe") return run_describe(cfg, x, out);
    if (command == "index") return run_index(cfg, x, out);
    if (command == "query") return run_query(cfg, x, out);
    return run_experiment_command(cfg, command == "sweep", out);
  } catch (const Error& e) {
    err << "vpr: " << e.what() << '\n';
    if (e.code() == ErrorCode::UsageError) {
      err << "Run with --help for more information.\n";
      return 2;
    }
    return 1;
  } catch (const std::exception& e) {
    err << "vpr: " << e.what() << '\n';
    return 1;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace vpr
