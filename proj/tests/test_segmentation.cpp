#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <set>

#include "vpr/error.hpp"
#include "vpr/image.hpp"
#include "vpr/segmentation.hpp"

using vpr::ErrorCode;

namespace {

std::pair<int, int> ordered(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

vpr::LabImage constant_lab(int w, int h, std::uint8_t v) {
  vpr::Image img(w, h);
  std::fill(img.data().begin(), img.data().end(), v);
  return vpr::rgb_to_lab(img);
}

vpr::Image random_blobs(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  vpr::Image img(w, h);
  const int n = 6;
  std::vector<std::array<double, 6>> blobs(n);
  for (auto& b : blobs) b = {u(rng) * w, u(rng) * h, 5 + u(rng) * 25, u(rng) * 255, u(rng) * 255, u(rng) * 255};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double c[3] = {40, 60, 80}, wsum = 1.0;
      for (const auto& b : blobs) {
        const double d2 = (x - b[0]) * (x - b[0]) + (y - b[1]) * (y - b[1]);
        const double wgt = 4.0 * std::exp(-d2 / (2 * b[2] * b[2]));
        for (int k = 0; k < 3; ++k) c[k] += wgt * b[3 + k];
        wsum += wgt;
      }
      for (int k = 0; k < 3; ++k) img.pixel(x, y)[k] = static_cast<std::uint8_t>(std::clamp(c[k] / wsum + 10 * u(rng), 0.0, 255.0));
    }
  }
  return img;
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const vpr::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no vpr::Error thrown";
  return ErrorCode::IoError;
}

// Number of 4-connected components per label, by flood fill.
std::map<int, int> components_per_label(const vpr::SuperpixelMap& sp) {
  std::vector<char> seen(sp.labels.size(), 0);
  std::map<int, int> comps;
  for (int y = 0; y < sp.height; ++y) {
    for (int x = 0; x < sp.width; ++x) {
      const std::size_t start = static_cast<std::size_t>(y) * sp.width + x;
      if (seen[start]) continue;
      const int l = sp.labels[start];
      ++comps[l];
      std::queue<std::pair<int, int>> q;
      q.push({x, y});
      seen[start] = 1;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop();
        const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int nx = cx + dx[d], ny = cy + dy[d];
          if (nx < 0 || ny < 0 || nx >= sp.width || ny >= sp.height) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * sp.width + nx;
          if (seen[j] || sp.labels[j] != l) continue;
          seen[j] = 1;
          q.push({nx, ny});
        }
      }
    }
  }
  return comps;
}

void expect_valid_superpixels(const vpr::SuperpixelMap& sp) {
  ASSERT_GE(sp.count, 2);
  ASSERT_EQ(sp.labels.size(), static_cast<std::size_t>(sp.width) * sp.height);
  for (int l : sp.labels) {
    ASSERT_GE(l, 0);
    ASSERT_LT(l, sp.count);
  }
  const auto comps = components_per_label(sp);
  EXPECT_EQ(static_cast<int>(comps.size()), sp.count);
  for (const auto& [label, n] : comps) EXPECT_EQ(n, 1) << "label " << label;
}

std::set<std::pair<int, int>> leaf_adjacency(const vpr::SuperpixelMap& sp) {
  std::set<std::pair<int, int>> adj;
  for (int y = 0; y < sp.height; ++y) {
    for (int x = 0; x < sp.width; ++x) {
      const int a = sp.label(x, y);
      if (x + 1 < sp.width && sp.label(x + 1, y) != a) adj.insert(ordered(a, sp.label(x + 1, y)));
      if (y + 1 < sp.height && sp.label(x, y + 1) != a) adj.insert(ordered(a, sp.label(x, y + 1)));
    }
  }
  return adj;
}

void expect_valid_tree(const vpr::RegionTree& tree, const vpr::SuperpixelMap& sp) {
  const int s = sp.count;
  ASSERT_EQ(tree.leaf_count, s);
  ASSERT_EQ(static_cast<int>(tree.nodes.size()), 2 * s - 1);
  ASSERT_EQ(static_cast<int>(tree.merges.size()), s - 1);
  for (int i = 0; i < s; ++i) {
    EXPECT_TRUE(tree.nodes[i].is_leaf());
    EXPECT_EQ(tree.nodes[i].members, std::vector<int>{i});
  }
  const auto adj = leaf_adjacency(sp);
  for (int i = s; i < 2 * s - 1; ++i) {
    const vpr::Region& r = tree.nodes[i];
    ASSERT_TRUE(r.children.has_value());
    const auto [a, b] = *r.children;
    ASSERT_LT(a, i);
    ASSERT_LT(b, i);
    std::vector<int> ma = tree.nodes[a].members, mb = tree.nodes[b].members, both;
    std::vector<int> overlap;
    std::set_intersection(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(overlap));
    EXPECT_TRUE(overlap.empty());
    std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(both));
    EXPECT_EQ(r.members, both);
    EXPECT_EQ(r.pixel_count, tree.nodes[a].pixel_count + tree.nodes[b].pixel_count);

    const vpr::Merge& m = tree.merges[i - s];
    EXPECT_EQ(m.parent, i);
    EXPECT_EQ(ordered(m.a, m.b), ordered(a, b));
    bool adjacent = false;
    for (int x : ma) {
      for (int y : mb) adjacent = adjacent || adj.contains(ordered(x, y));
    }
    EXPECT_TRUE(adjacent) << "merge " << i - s << " joined non-adjacent regions";
  }
  std::vector<int> all(s);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(tree.root().members, all);

  std::vector<int> parents(2 * s - 1, 0);
  for (int i = s; i < 2 * s - 1; ++i) {
    ++parents[tree.nodes[i].children->first];
    ++parents[tree.nodes[i].children->second];
  }
  for (int i = 0; i + 1 < 2 * s - 1; ++i) EXPECT_EQ(parents[i], 1);
  EXPECT_EQ(parents.back(), 0);
}

vpr::SuperpixelMap tile_map(int tiles_x, int tiles_y, int tile) {
  vpr::SuperpixelMap sp;
  sp.width = tiles_x * tile;
  sp.height = tiles_y * tile;
  sp.count = tiles_x * tiles_y;
  sp.labels.resize(static_cast<std::size_t>(sp.width) * sp.height);
  for (int y = 0; y < sp.height; ++y) {
    for (int x = 0; x < sp.width; ++x) sp.labels[y * sp.width + x] = (y / tile) * tiles_x + x / tile;
  }
  return sp;
}

}  // namespace

TEST(Slic, ConstantImageGivesTwoByTwoGrid) {
  const vpr::SuperpixelMap sp = vpr::slic_segment(constant_lab(64, 64, 128), {4, 10.0, 10});
  expect_valid_superpixels(sp);
  ASSERT_EQ(sp.count, 4);
  std::set<int> quadrant_labels;
  for (int qy = 0; qy < 2; ++qy) {
    for (int qx = 0; qx < 2; ++qx) {
      std::map<int, int> votes;
      for (int y = qy * 32; y < qy * 32 + 32; ++y) {
        for (int x = qx * 32; x < qx * 32 + 32; ++x) ++votes[sp.label(x, y)];
      }
      auto best = std::max_element(votes.begin(), votes.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
      EXPECT_GE(best->second, 0.9 * 32 * 32);
      quadrant_labels.insert(best->first);
    }
  }
  EXPECT_EQ(quadrant_labels.size(), 4u);
}

TEST(Slic, BlackWhiteBoundaryNearColumn32) {
  vpr::Image img(64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 32; x < 64; ++x) std::fill_n(img.pixel(x, y), 3, 255);
  }
  const vpr::SuperpixelMap sp = vpr::slic_segment(vpr::rgb_to_lab(img), {2, 10.0, 10});
  expect_valid_superpixels(sp);
  ASSERT_EQ(sp.count, 2);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x + 1 < 64; ++x) {
      if (sp.label(x, y) != sp.label(x + 1, y)) {
        EXPECT_NEAR(x + 1, 32, 2) << "row " << y;
      }
    }
  }
  EXPECT_NE(sp.label(0, 0), sp.label(63, 0));
}

TEST(Slic, PreconditionErrors) {
  const vpr::LabImage lab = constant_lab(64, 64, 50);
  EXPECT_EQ(code_of([&] { vpr::slic_segment(lab, {10000, 10.0, 10}); }), ErrorCode::TargetCountTooLarge);
  EXPECT_EQ(code_of([&] { vpr::slic_segment(lab, {1, 10.0, 10}); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { vpr::slic_segment(constant_lab(16, 200, 50), {2, 10.0, 10}); }), ErrorCode::DegenerateImage);
}

TEST(Slic, RealizesTheTargetOnBenchmarkSizedImages) {
  const vpr::SuperpixelMap sp = vpr::slic_segment(constant_lab(160, 120, 90), {72, 10.0, 10});
  expect_valid_superpixels(sp);
  EXPECT_EQ(sp.count, 72);
}

TEST(Slic, RandomImagesYieldConnectedCompleteLabelings) {
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    const vpr::LabImage lab = vpr::rgb_to_lab(random_blobs(96 + 4 * seed, 80, seed));
    const vpr::SuperpixelMap sp = vpr::slic_segment(lab, {30, 10.0, 10});
    SCOPED_TRACE(seed);
    expect_valid_superpixels(sp);
    expect_valid_tree(vpr::build_region_tree(sp, lab), sp);
  }
}

TEST(Slic, Deterministic) {
  const vpr::LabImage lab = vpr::rgb_to_lab(random_blobs(120, 90, 42));
  const auto a = vpr::slic_segment(lab, {40, 10.0, 10});
  const auto b = vpr::slic_segment(lab, {40, 10.0, 10});
  EXPECT_EQ(a.labels, b.labels);
}

TEST(RegionTree, TwoSuperpixelsGiveThreeNodes) {
  const vpr::SuperpixelMap sp = tile_map(2, 1, 16);
  const vpr::RegionTree tree = vpr::build_region_tree(sp, constant_lab(32, 16, 10));
  expect_valid_tree(tree, sp);
  EXPECT_EQ(tree.nodes.size(), 3u);
  EXPECT_EQ(tree.root().members, (std::vector<int>{0, 1}));
}

TEST(RegionTree, SameColourPairsMergeFirst) {
  // 0 1 black on top, 2 3 white below.
  const vpr::SuperpixelMap sp = tile_map(2, 2, 16);
  vpr::Image img(32, 32);
  for (int y = 16; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) std::fill_n(img.pixel(x, y), 3, 255);
  }
  const vpr::RegionTree tree = vpr::build_region_tree(sp, vpr::rgb_to_lab(img));
  expect_valid_tree(tree, sp);
  ASSERT_EQ(tree.merges.size(), 3u);
  std::set<std::pair<int, int>> first_two{ordered(tree.merges[0].a, tree.merges[0].b),
                                          ordered(tree.merges[1].a, tree.merges[1].b)};
  EXPECT_EQ(first_two, (std::set<std::pair<int, int>>{{0, 1}, {2, 3}}));
  EXPECT_NEAR(tree.merges[0].distance, 0.0, 1e-12);
  EXPECT_NEAR(tree.merges[1].distance, 0.0, 1e-12);
  EXPECT_GT(tree.merges[2].distance, 50.0);
}

TEST(RegionTree, TieBreakPrefersSmallerPair) {
  const vpr::SuperpixelMap sp = tile_map(4, 1, 16);
  const vpr::RegionTree tree = vpr::build_region_tree(sp, constant_lab(64, 16, 77));
  ASSERT_EQ(tree.merges.size(), 3u);
  EXPECT_EQ(ordered(tree.merges[0].a, tree.merges[0].b), std::make_pair(0, 1));
}

TEST(RegionTree, SeventyTwoLeavesGive143Nodes) {
  const vpr::SuperpixelMap sp = tile_map(9, 8, 16);
  const vpr::RegionTree tree = vpr::build_region_tree(sp, vpr::rgb_to_lab(random_blobs(144, 128, 9)));
  expect_valid_tree(tree, sp);
  EXPECT_EQ(tree.nodes.size(), 143u);
}

TEST(RegionTree, MeanColourIsPixelWeighted) {
  const vpr::LabImage lab = vpr::rgb_to_lab(random_blobs(100, 80, 3));
  const vpr::SuperpixelMap sp = vpr::slic_segment(lab, {20, 10.0, 10});
  const vpr::RegionTree tree = vpr::build_region_tree(sp, lab);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (Eigen::Index i = 0; i < lab.pixels.rows(); ++i) mean += lab.pixels.row(i).transpose();
  mean /= static_cast<double>(lab.pixels.rows());
  EXPECT_LT((tree.root().mean_lab - mean).norm(), 1e-9);
  EXPECT_EQ(tree.root().pixel_count, 100 * 80);
}
