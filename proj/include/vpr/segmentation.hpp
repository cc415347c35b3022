#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vpr/image.hpp"

namespace vpr {

struct SlicParams {
  int target_count = 72;
  double compactness = 10.0;
  int iterations = 10;
};

/// Per-pixel superpixel labels in [0, count). Every label is one 4-connected
/// component.
struct SuperpixelMap {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<int> labels;

  int label(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// SLIC over-segmentation. The realized count may differ from the target
/// because connectivity enforcement absorbs fragments into their neighbours.
SuperpixelMap slic_segment(const LabImage& img, const SlicParams& params);

struct Region {
  int id = 0;
  std::vector<int> members;  // sorted superpixel indices
  std::optional<std::pair<int, int>> children;
  Eigen::Vector3d mean_lab = Eigen::Vector3d::Zero();
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  long pixel_count = 0;

  bool is_leaf() const noexcept { return !children.has_value(); }
};

struct Merge {
  int a = 0;
  int b = 0;
  int parent = 0;
  double distance = 0.0;
};

/// Dendrogram over 2S - 1 nodes. Ids [0, S) are the superpixels; id S + i is
/// the result of the i-th merge, so the root is the last node.
struct RegionTree {
  int leaf_count = 0;
  std::vector<Region> nodes;
  std::vector<Merge> merges;

  const Region& root() const { return nodes.back(); }
};

/// Greedy agglomeration over the region adjacency graph: the adjacent pair
/// with the smallest mean-Lab distance merges first, ties to the
/// lexicographically smaller id pair.
RegionTree build_region_tree(const SuperpixelMap& sp, const LabImage& img);

}  // namespace vpr
