#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vpr/encoding.hpp"
#include "vpr/features.hpp"
#include "vpr/image.hpp"
#include "vpr/segmentation.hpp"

namespace vpr {

struct ParseConfig {
  SlicParams slic;  // slic.target_count is R
  int landmarks = 40;  // K
  int min_keypoints = 5;
  SiftParams sift;
};

struct Landmark {
  LandmarkRegion region;
  VladCode code;
};

struct ParsedScene {
  std::string image_id;
  int width = 0;
  int height = 0;
  FeatureSet features;
  std::vector<Landmark> landmarks;
};

/// SLIC, region tree, features, PCA saliency, landmark selection and one
/// VLAD code per landmark. Throws EmptyScene when no keypoint is found.
ParsedScene parse_scene(const Image& img, const ParseConfig& cfg, const Codebook& cb, std::string image_id);
/// As above with features already extracted from `img`.
ParsedScene parse_scene(const Image& img, FeatureSet features, const ParseConfig& cfg, const Codebook& cb,
                        std::string image_id);

/// Same pipeline, but an image that yields no landmark is kept with an empty
/// landmark list instead of failing.
ParsedScene parse_scene_lenient(const Image& img, FeatureSet features, const ParseConfig& cfg, const Codebook& cb,
                                std::string image_id);

/// All landmark codes of a library stacked row-wise for batched distance
/// evaluation. Holds a view of `scenes`; the caller keeps them alive.
class LandmarkLibrary {
 public:
  explicit LandmarkLibrary(std::span<const ParsedScene> scenes);

  std::size_t size() const noexcept { return scenes_.size(); }
  const ParsedScene& scene(std::size_t i) const { return scenes_[i]; }
  const std::string& id(std::size_t i) const { return scenes_[i].image_id; }
  const Eigen::MatrixXd& codes() const noexcept { return codes_; }  // one code per column
  const std::vector<int>& owners() const noexcept { return owners_; }

 private:
  std::span<const ParsedScene> scenes_;
  Eigen::MatrixXd codes_;
  std::vector<int> owners_;
};

/// A ranking of L_o library images. order[r] is the library index at rank
/// r + 1 and rank[j] is the 1-based rank of library index j.
struct Ranking {
  std::vector<int> order;
  std::vector<int> rank;
  std::vector<double> distance;
};

/// Library images by ascending best-landmark distance to `query_code`.
/// Images without landmarks sit at +inf; ties go to the lower index.
Ranking rank_library(const VladCode& query_code, const LandmarkLibrary& library);
Ranking rank_library(const VladCode& query_code, std::span<const ParsedScene> library);

/// score[j] = sum over rankings of 1 / rank[j].
std::vector<double> reverse_rank_scores(std::span<const Ranking> rankings);

struct LibrarySelection {
  std::vector<int> indices;
  int requested = 0;

  int shortfall() const noexcept { return requested - static_cast<int>(indices.size()); }
};

/// Top `count` library indices by descending score, ties by ascending id.
LibrarySelection select_library_images(std::span<const double> scores, std::span<const std::string> ids, int count);

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return width() * height(); }
  bool contains(const BoundingBox& other) const noexcept {
    return x_min <= other.x_min && y_min <= other.y_min && other.x_max <= x_max && other.y_max <= y_max;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Box over the middle of the sorted x and y values: floor(n / 10) values are
/// dropped from each end of each axis independently. Clamped to
/// [0, width] x [0, height].
BoundingBox trimmed_bbox(std::span<const Eigen::Vector2d> points, int width, int height);
BoundingBox untrimmed_bbox(std::span<const Eigen::Vector2d> points, int width, int height);

/// Exact nearest library descriptor for every query descriptor; ties go to
/// the lower library index.
std::vector<int> nearest_neighbors(const DescriptorMatrix& query, const DescriptorMatrix& library);

/// Box around the library keypoints matched by the query features.
BoundingBox estimate_bbox(const FeatureSet& f_q, const FeatureSet& f_l, int library_width, int library_height);

struct DescriptorEntry {
  std::string library_id;
  BoundingBox bbox;
  double score = 0.0;

  friend bool operator==(const DescriptorEntry&, const DescriptorEntry&) = default;
};

/// L pairs of library image id and bounding box, best library image first.
struct SceneDescriptor {
  std::string image_id;
  std::vector<DescriptorEntry> entries;

  /// The first `count` entries; descriptors of a smaller L are prefixes of
  /// those of a larger one.
  SceneDescriptor truncated(std::size_t count) const;

  friend bool operator==(const SceneDescriptor&, const SceneDescriptor&) = default;
};

SceneDescriptor describe_scene(const ParsedScene& parsed, const LandmarkLibrary& library, int count);
SceneDescriptor describe_scene(const ParsedScene& parsed, std::span<const ParsedScene> library, int count);

}  // namespace vpr
