#include "vpr/serialize.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vpr/error.hpp"

namespace vpr {

namespace {

using nlohmann::json;

template <typename Fn>
auto guarded(std::string_view what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

json bbox_to_json(const BoundingBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

BoundingBox bbox_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::ParseError, "bbox must be [x_min,y_min,x_max,y_max]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json matrix_rows(const DescriptorMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).data(), m.row(r).data() + m.cols()));
  }
  return rows;
}

DescriptorMatrix matrix_from_rows(const json& rows, Eigen::Index cols) {
  DescriptorMatrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto values = rows[r].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != cols) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(r) + " has " + std::to_string(values.size()) +
                                             " values, expected " + std::to_string(cols));
    }
    m.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(values.data(), cols);
  }
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

template <typename T, typename Parse>
std::vector<T> read_lines(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse(line));
  }
  return out;
}

}  // namespace

std::string codebook_to_json(const Codebook& cb) {
  json j;
  j["k"] = cb.k();
  j["dim"] = cb.dim();
  j["seed"] = cb.seed;
  j["centroids"] = matrix_rows(cb.centroids);
  return j.dump();
}

Codebook codebook_from_json(std::string_view text) {
  return guarded("codebook", [&] {
    const json j = json::parse(text);
    Codebook cb;
    const int k = j.at("k").get<int>();
    const int dim = j.at("dim").get<int>();
    cb.seed = j.at("seed").get<std::uint64_t>();
    cb.centroids = matrix_from_rows(j.at("centroids"), dim);
    if (cb.k() != k) throw Error(ErrorCode::ParseError, "codebook k does not match its centroid count");
    return cb;
  });
}

std::string descriptor_to_json_line(const SceneDescriptor& d) {
  json entries = json::array();
  for (const DescriptorEntry& e : d.entries) {
    entries.push_back({{"library_id", e.library_id}, {"bbox", bbox_to_json(e.bbox)}, {"score", e.score}});
  }
  return json{{"image_id", d.image_id}, {"entries", entries}}.dump();
}

SceneDescriptor descriptor_from_json_line(std::string_view line) {
  return guarded("scene descriptor", [&] {
    const json j = json::parse(line);
    SceneDescriptor d;
    d.image_id = j.at("image_id").get<std::string>();
    for (const json& e : j.at("entries")) {
      d.entries.push_back({e.at("library_id").get<std::string>(), bbox_from_json(e.at("bbox")), e.value("score", 0.0)});
    }
    return d;
  });
}

std::string index_to_json(const InvertedFile& index) {
  json postings = json::object();
  for (std::size_t i = 0; i < index.library_ids().size(); ++i) {
    json list = json::array();
    for (const Posting& p : index.postings(i)) list.push_back({{"db_id", p.db_id}, {"bbox", bbox_to_json(p.bbox)}});
    postings[index.library_ids()[i]] = std::move(list);
  }
  json j;
  j["format_version"] = kIndexFormatVersion;
  j["library_ids"] = index.library_ids();
  j["postings"] = std::move(postings);
  j["database_ids"] = index.database_ids();
  return j.dump();
}

InvertedFile index_from_json(std::string_view text) {
  return guarded("index", [&] {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kIndexFormatVersion) {
      throw Error(ErrorCode::ParseError, "unsupported index format_version " + std::to_string(version));
    }
    auto library_ids = j.at("library_ids").get<std::vector<std::string>>();
    const json& by_id = j.at("postings");
    std::vector<std::vector<Posting>> postings;
    postings.reserve(library_ids.size());
    for (const std::string& id : library_ids) {
      std::vector<Posting>& list = postings.emplace_back();
      if (!by_id.contains(id)) continue;
      for (const json& p : by_id.at(id)) list.push_back({p.at("db_id").get<std::string>(), bbox_from_json(p.at("bbox"))});
    }
    return InvertedFile(std::move(library_ids), std::move(postings),
                        j.at("database_ids").get<std::vector<std::string>>());
  });
}

std::string scene_to_json_line(const ParsedScene& scene) {
  json keypoints = json::array();
  for (const Keypoint& kp : scene.features.keypoints) {
    keypoints.push_back({kp.x, kp.y, kp.scale, kp.orientation, kp.response});
  }
  json landmarks = json::array();
  for (const Landmark& lm : scene.landmarks) {
    landmarks.push_back({{"region_id", lm.region.region_id},
                         {"saliency", lm.region.saliency},
                         {"members", lm.region.member_keypoints},
                         {"code", std::vector<double>(lm.code.data(), lm.code.data() + lm.code.size())}});
  }
  return json{{"image_id", scene.image_id},
              {"width", scene.width},
              {"height", scene.height},
              {"keypoints", keypoints},
              {"descriptors", matrix_rows(scene.features.descriptors)},
              {"landmarks", landmarks}}
      .dump();
}

ParsedScene scene_from_json_line(std::string_view line) {
  return guarded("parsed scene", [&] {
    const json j = json::parse(line);
    ParsedScene s;
    s.image_id = j.at("image_id").get<std::string>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    for (const json& kp : j.at("keypoints")) {
      const auto v = kp.get<std::vector<double>>();
      if (v.size() != 5) throw Error(ErrorCode::ParseError, "keypoint must be [x,y,scale,orientation,response]");
      s.features.keypoints.push_back({v[0], v[1], v[2], v[3], v[4]});
    }
    s.features.descriptors = matrix_from_rows(j.at("descriptors"), kDescriptorDim);
    if (s.features.descriptors.rows() != static_cast<Eigen::Index>(s.features.keypoints.size())) {
      throw Error(ErrorCode::ParseError, "keypoint and descriptor counts differ");
    }
    for (const json& lm : j.at("landmarks")) {
      Landmark out;
      out.region.region_id = lm.at("region_id").get<int>();
      out.region.saliency = lm.at("saliency").get<double>();
      out.region.member_keypoints = lm.at("members").get<std::vector<int>>();
      const auto code = lm.at("code").get<std::vector<double>>();
      out.code = Eigen::Map<const Eigen::VectorXd>(code.data(), static_cast<Eigen::Index>(code.size()));
      s.landmarks.push_back(std::move(out));
    }
    return s;
  });
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) { write_file(path, codebook_to_json(cb) + "\n"); }

Codebook load_codebook(const std::filesystem::path& path) { return codebook_from_json(read_file(path)); }

void save_descriptors(std::span<const SceneDescriptor> descriptors, const std::filesystem::path& path) {
  std::string text;
  for (const SceneDescriptor& d : descriptors) text += descriptor_to_json_line(d) + "\n";
  write_file(path, text);
}

std::vector<SceneDescriptor> load_descriptors(const std::filesystem::path& path) {
  return read_lines<SceneDescriptor>(path, descriptor_from_json_line);
}

void save_index(const InvertedFile& index, const std::filesystem::path& path) { write_file(path, index_to_json(index) + "\n"); }

InvertedFile load_index(const std::filesystem::path& path) { return index_from_json(read_file(path)); }

void save_scenes(std::span<const ParsedScene> scenes, const std::filesystem::path& path) {
  std::string text;
  for (const ParsedScene& s : scenes) text += scene_to_json_line(s) + "\n";
  write_file(path, text);
}

std::vector<ParsedScene> load_scenes(const std::filesystem::path& path) {
  return read_lines<ParsedScene>(path, scene_from_json_line);
}

}  // namespace vpr
