#include "vpr/mining.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace vpr {

ParsedScene parse_scene(const Image& img, const ParseConfig& cfg, const Codebook& cb, std::string image_id) {
  return parse_scene(img, detect_and_describe(to_grayscale(img), cfg.sift), cfg, cb, std::move(image_id));
}

ParsedScene parse_scene(const Image& img, FeatureSet features, const ParseConfig& cfg, const Codebook& cb,
                        std::string image_id) {
  ParsedScene scene;
  scene.image_id = std::move(image_id);
  scene.width = img.width();
  scene.height = img.height();
  scene.features = std::move(features);
  if (scene.features.empty()) throw Error(ErrorCode::EmptyScene, scene.image_id + ": no keypoints detected");

  const LabImage lab = rgb_to_lab(img);
  const SuperpixelMap sp = slic_segment(lab, cfg.slic);
  const RegionTree tree = build_region_tree(sp, lab);
  const Eigen::VectorXd scores = pca_distinctiveness(scene.features.descriptors);
  LandmarkSelection sel = select_landmarks(tree, sp, scene.features, scores, cfg.landmarks, cfg.min_keypoints);

  scene.landmarks.reserve(sel.landmarks.size());
  for (LandmarkRegion& region : sel.landmarks) {
    VladCode code = vlad_encode(scene.features.descriptors(region.member_keypoints, Eigen::all), cb);
    scene.landmarks.push_back({std::move(region), std::move(code)});
  }
  return scene;
}

ParsedScene parse_scene_lenient(const Image& img, FeatureSet features, const ParseConfig& cfg, const Codebook& cb,
                                std::string image_id) {
  try {
    return parse_scene(img, features, cfg, cb, image_id);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyScene && e.code() != ErrorCode::TooFewDescriptors &&
        e.code() != ErrorCode::NoCandidates) {
      throw;
    }
  }
  ParsedScene scene;
  scene.image_id = std::move(image_id);
  scene.width = img.width();
  scene.height = img.height();
  scene.features = std::move(features);
  return scene;
}

LandmarkLibrary::LandmarkLibrary(std::span<const ParsedScene> scenes) : scenes_(scenes) {
  Eigen::Index total = 0;
  Eigen::Index dim = -1;
  for (const ParsedScene& s : scenes_) {
    for (const Landmark& lm : s.landmarks) {
      if (dim < 0) dim = lm.code.size();
      if (lm.code.size() != dim) throw Error(ErrorCode::DimensionMismatch, "library VLAD codes differ in length");
      ++total;
    }
  }
  codes_.resize(std::max<Eigen::Index>(dim, 0), total);
  owners_.reserve(total);
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < scenes_.size(); ++j) {
    for (const Landmark& lm : scenes_[j].landmarks) {
      codes_.col(col++) = lm.code;
      owners_.push_back(static_cast<int>(j));
    }
  }
}

namespace {

// One ranking per column of `queries`. Squared distances come from the
// expansion |q|^2 + |c|^2 - 2 q.c so that a whole scene is one product.
std::vector<Ranking> rank_library_batch(const Eigen::MatrixXd& queries, const LandmarkLibrary& library) {
  const std::size_t n = library.size();
  if (n == 0) throw Error(ErrorCode::EmptyLibrary, "library has no images");
  const Eigen::MatrixXd& codes = library.codes();
  if (codes.cols() > 0 && queries.rows() != codes.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "query VLAD length differs from library codes");
  }
  Eigen::MatrixXd dots;
  Eigen::RowVectorXd code_norms;
  if (codes.cols() > 0) {
    dots = queries.transpose() * codes;
    code_norms = codes.colwise().squaredNorm();
  }

  std::vector<Ranking> rankings(queries.cols());
  for (Eigen::Index q = 0; q < queries.cols(); ++q) {
    Ranking& r = rankings[q];
    r.distance.assign(n, std::numeric_limits<double>::infinity());
    const double qn = queries.col(q).squaredNorm();
    for (Eigen::Index c = 0; c < codes.cols(); ++c) {
      const double d = std::sqrt(std::max(0.0, qn + code_norms[c] - 2.0 * dots(q, c)));
      double& best = r.distance[library.owners()[c]];
      best = std::min(best, d);
    }
    r.order.resize(n);
    std::iota(r.order.begin(), r.order.end(), 0);
    std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) { return r.distance[a] < r.distance[b]; });
    r.rank.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos) r.rank[r.order[pos]] = static_cast<int>(pos) + 1;
  }
  return rankings;
}

}  // namespace

Ranking rank_library(const VladCode& query_code, const LandmarkLibrary& library) {
  return rank_library_batch(Eigen::MatrixXd(query_code), library).front();
}

Ranking rank_library(const VladCode& query_code, std::span<const ParsedScene> library) {
  return rank_library(query_code, LandmarkLibrary(library));
}

std::vector<double> reverse_rank_scores(std::span<const Ranking> rankings) {
  if (rankings.empty()) return {};
  const std::size_t n = rankings.front().rank.size();
  std::vector<double> scores(n, 0.0);
  std::vector<bool> seen(n + 1);
  for (const Ranking& r : rankings) {
    if (r.rank.size() != n) throw Error(ErrorCode::InconsistentRankings, "rankings cover different library sizes");
    std::fill(seen.begin(), seen.end(), false);
    for (int rk : r.rank) {
      if (rk < 1 || rk > static_cast<int>(n) || seen[rk]) {
        throw Error(ErrorCode::InconsistentRankings, "ranking is not a permutation of 1..L_o");
      }
      seen[rk] = true;
    }
    for (std::size_t j = 0; j < n; ++j) scores[j] += 1.0 / r.rank[j];
  }
  return scores;
}

LibrarySelection select_library_images(std::span<const double> scores, std::span<const std::string> ids, int count) {
  if (count < 1) throw Error(ErrorCode::InvalidParams, "L must be positive");
  if (scores.size() != ids.size()) throw Error(ErrorCode::DimensionMismatch, "one score per library id required");
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  order.resize(std::min<std::size_t>(order.size(), count));
  return {std::move(order), count};
}

namespace {

std::pair<double, double> axis_range(std::vector<double> values, bool trim) {
  std::sort(values.begin(), values.end());
  const std::size_t drop = trim ? values.size() / 10 : 0;
  return {values[drop], values[values.size() - 1 - drop]};
}

BoundingBox box_from_points(std::span<const Eigen::Vector2d> points, int width, int height, bool trim) {
  if (points.empty()) throw Error(ErrorCode::EmptyFeatureSet, "no matched keypoints");
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& p : points) {
    xs.push_back(p.x());
    ys.push_back(p.y());
  }
  const auto [x0, x1] = axis_range(std::move(xs), trim);
  const auto [y0, y1] = axis_range(std::move(ys), trim);
  const double w = width, h = height;
  return {std::clamp(x0, 0.0, w), std::clamp(y0, 0.0, h), std::clamp(x1, 0.0, w), std::clamp(y1, 0.0, h)};
}

}  // namespace

BoundingBox trimmed_bbox(std::span<const Eigen::Vector2d> points, int width, int height) {
  return box_from_points(points, width, height, true);
}

BoundingBox untrimmed_bbox(std::span<const Eigen::Vector2d> points, int width, int height) {
  return box_from_points(points, width, height, false);
}

std::vector<int> nearest_neighbors(const DescriptorMatrix& query, const DescriptorMatrix& library) {
  if (query.rows() == 0 || library.rows() == 0) throw Error(ErrorCode::EmptyFeatureSet, "nothing to match");
  if (query.cols() != library.cols()) throw Error(ErrorCode::DimensionMismatch, "descriptor dimensions differ");
  // |q|^2 is constant per query row and does not affect the argmin.
  const Eigen::MatrixXd dots = query * library.transpose();
  const Eigen::RowVectorXd norms = library.rowwise().squaredNorm().transpose();
  std::vector<int> nn(query.rows());
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < library.rows(); ++j) {
      const double d = norms[j] - 2.0 * dots(i, j);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    nn[i] = static_cast<int>(best);
  }
  return nn;
}

BoundingBox estimate_bbox(const FeatureSet& f_q, const FeatureSet& f_l, int library_width, int library_height) {
  if (f_q.empty() || f_l.empty()) throw Error(ErrorCode::EmptyFeatureSet, "bounding box needs features on both sides");
  const std::vector<int> nn = nearest_neighbors(f_q.descriptors, f_l.descriptors);
  std::vector<Eigen::Vector2d> matched;
  matched.reserve(nn.size());
  for (int j : nn) matched.emplace_back(f_l.keypoints[j].x, f_l.keypoints[j].y);
  return trimmed_bbox(matched, library_width, library_height);
}

SceneDescriptor SceneDescriptor::truncated(std::size_t count) const {
  SceneDescriptor out{image_id, {}};
  out.entries.assign(entries.begin(), entries.begin() + std::min(count, entries.size()));
  return out;
}

SceneDescriptor describe_scene(const ParsedScene& parsed, const LandmarkLibrary& library, int count) {
  if (library.size() == 0) throw Error(ErrorCode::EmptyLibrary, "library has no images");
  if (parsed.landmarks.empty()) throw Error(ErrorCode::EmptyScene, parsed.image_id + " has no landmarks");

  Eigen::MatrixXd queries(parsed.landmarks.front().code.size(), static_cast<Eigen::Index>(parsed.landmarks.size()));
  for (std::size_t i = 0; i < parsed.landmarks.size(); ++i) queries.col(static_cast<Eigen::Index>(i)) = parsed.landmarks[i].code;
  const std::vector<Ranking> rankings = rank_library_batch(queries, library);
  const std::vector<double> scores = reverse_rank_scores(rankings);

  std::vector<std::string> ids;
  ids.reserve(library.size());
  for (std::size_t j = 0; j < library.size(); ++j) ids.push_back(library.id(j));
  const LibrarySelection sel = select_library_images(scores, ids, count);

  SceneDescriptor desc{parsed.image_id, {}};
  for (int j : sel.indices) {
    const ParsedScene& lib = library.scene(j);
    DescriptorEntry entry{lib.image_id, {}, scores[j]};
    // A featureless library image cannot be matched; it keeps a zero-area box.
    if (!parsed.features.empty() && !lib.features.empty()) {
      entry.bbox = estimate_bbox(parsed.features, lib.features, lib.width, lib.height);
    }
    desc.entries.push_back(std::move(entry));
  }
  return desc;
}

SceneDescriptor describe_scene(const ParsedScene& parsed, std::span<const ParsedScene> library, int count) {
  return describe_scene(parsed, LandmarkLibrary(library), count);
}

}  // namespace vpr
