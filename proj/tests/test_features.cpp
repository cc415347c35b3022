#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "vpr/error.hpp"
#include "vpr/features.hpp"
#include "vpr/image.hpp"
#include "vpr/segmentation.hpp"

using vpr::ErrorCode;

namespace {

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

vpr::GrayImage checkerboard(int size, int square) {
  vpr::GrayImage g{vpr::GrayMatrix(size, size)};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) g.values(y, x) = ((x / square + y / square) % 2) ? 255.0 : 0.0;
  }
  return g;
}

vpr::GrayImage smooth_noise(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  vpr::GrayMatrix coarse(h / 8 + 2, w / 8 + 2);
  for (Eigen::Index i = 0; i < coarse.size(); ++i) coarse.data()[i] = u(rng);
  vpr::GrayImage g{vpr::GrayMatrix(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = x / 8.0, fy = y / 8.0;
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const double tx = fx - x0, ty = fy - y0;
      g.values(y, x) = (1 - tx) * (1 - ty) * coarse(y0, x0) + tx * (1 - ty) * coarse(y0, x0 + 1) +
                       (1 - tx) * ty * coarse(y0 + 1, x0) + tx * ty * coarse(y0 + 1, x0 + 1);
    }
  }
  return g;
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

vpr::LabImage constant_lab(int w, int h) {
  vpr::Image img(w, h);
  std::fill(img.data().begin(), img.data().end(), 100);
  return vpr::rgb_to_lab(img);
}

vpr::FeatureSet keypoints_at(const std::vector<std::pair<double, double>>& xy) {
  vpr::FeatureSet fs;
  for (auto [x, y] : xy) fs.keypoints.push_back({x, y, 1.6, 0.0, 0.1});
  fs.descriptors = vpr::DescriptorMatrix::Zero(static_cast<Eigen::Index>(xy.size()), vpr::kDescriptorDim);
  return fs;
}

// Direct eigenbasis of a symmetric 2x2 covariance computed by rotation angle.
Eigen::VectorXd pca_scores_2d(const Eigen::MatrixX2d& pts) {
  const Eigen::RowVector2d mean = pts.colwise().mean();
  const Eigen::MatrixX2d c = pts.rowwise() - mean;
  const double n1 = static_cast<double>(pts.rows() - 1);
  const double a = c.col(0).squaredNorm() / n1, b = c.col(0).dot(c.col(1)) / n1, d = c.col(1).squaredNorm() / n1;
  const double theta = 0.5 * std::atan2(2.0 * b, a - d);
  const Eigen::Vector2d v1(std::cos(theta), std::sin(theta)), v2(-std::sin(theta), std::cos(theta));
  Eigen::VectorXd s(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) s[i] = std::abs(c.row(i).dot(v1)) + std::abs(c.row(i).dot(v2));
  return s;
}

}  // namespace

TEST(Detector, ConstantImageHasNoKeypoints) {
  vpr::GrayImage g{vpr::GrayMatrix::Constant(64, 64, 128.0)};
  const vpr::FeatureSet fs = vpr::detect_and_describe(g);
  EXPECT_TRUE(fs.empty());
  EXPECT_EQ(fs.descriptors.rows(), 0);
  EXPECT_EQ(fs.descriptors.cols(), vpr::kDescriptorDim);
}

TEST(Detector, DescriptorsAreUnitOrZeroAndKeypointsInBounds) {
  for (std::uint32_t seed = 0; seed < 5; ++seed) {
    const vpr::GrayImage g = smooth_noise(160, 120, seed);
    const vpr::FeatureSet fs = vpr::detect_and_describe(g);
    ASSERT_GT(fs.size(), 10u);
    ASSERT_EQ(fs.descriptors.rows(), static_cast<Eigen::Index>(fs.size()));
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const double n = fs.descriptors.row(static_cast<Eigen::Index>(i)).norm();
      EXPECT_TRUE(std::abs(n - 1.0) < 1e-6 || n == 0.0) << n;
      EXPECT_LE(fs.descriptors.row(static_cast<Eigen::Index>(i)).maxCoeff(), 1.0);
      const vpr::Keypoint& k = fs.keypoints[i];
      EXPECT_GE(k.x, 0.0);
      EXPECT_LT(k.x, 160.0);
      EXPECT_GE(k.y, 0.0);
      EXPECT_LT(k.y, 120.0);
      EXPECT_GT(k.scale, 0.0);
      EXPECT_GE(k.orientation, -M_PI);
      EXPECT_LT(k.orientation, M_PI);
    }
  }
}

TEST(Detector, Deterministic) {
  const vpr::GrayImage g = smooth_noise(96, 96, 11);
  const vpr::FeatureSet a = vpr::detect_and_describe(g), b = vpr::detect_and_describe(g);
  EXPECT_EQ(a.keypoints, b.keypoints);
  EXPECT_EQ(a.descriptors, b.descriptors);
}

// Regression fixture frozen from the detector on a 64x64 board of 8 px
// squares. The DoG response vanishes at the saddle-shaped corners, so the
// extrema sit on the square centres (3.5 + 8k) at the blob scale, plus four
// coarser blobs hugging the outer corners.
TEST(Detector, CheckerboardFixture) {
  const vpr::FeatureSet fs = vpr::detect_and_describe(checkerboard(64, 8));
  ASSERT_GE(fs.size(), 4u);
  EXPECT_EQ(fs.size(), 40u);

  int centres = 0, outer = 0;
  std::set<std::pair<int, int>> cells;
  for (const vpr::Keypoint& k : fs.keypoints) {
    const double cx = std::round((k.x - 3.5) / 8.0) * 8.0 + 3.5;
    const double cy = std::round((k.y - 3.5) / 8.0) * 8.0 + 3.5;
    if (std::abs(k.x - cx) < 0.01 && std::abs(k.y - cy) < 0.01) {
      ++centres;
      EXPECT_NEAR(k.scale, 2.5398, 1e-3);
      EXPECT_NEAR(std::abs(k.response), 0.1307, 1e-3);
      cells.insert({static_cast<int>(cx), static_cast<int>(cy)});
    } else {
      ++outer;
      EXPECT_NEAR(std::min(k.x, 63.0 - k.x), 4.6393, 1e-3);
      EXPECT_NEAR(std::min(k.y, 63.0 - k.y), 4.6393, 1e-3);
      EXPECT_NEAR(k.scale, 2.0159, 1e-3);
    }
  }
  EXPECT_EQ(centres, 36);
  EXPECT_EQ(cells.size(), 36u);
  EXPECT_EQ(outer, 4);
}

TEST(Detector, MaxKeypointsKeepsStrongest) {
  const vpr::GrayImage g = smooth_noise(128, 96, 3);
  const vpr::FeatureSet all = vpr::detect_and_describe(g);
  vpr::SiftParams p;
  p.max_keypoints = 10;
  const vpr::FeatureSet top = vpr::detect_and_describe(g, p);
  ASSERT_EQ(top.size(), 10u);
  std::vector<double> mags;
  for (const auto& k : all.keypoints) mags.push_back(std::abs(k.response));
  std::sort(mags.rbegin(), mags.rend());
  for (const auto& k : top.keypoints) EXPECT_GE(std::abs(k.response), mags[9]);
}

TEST(Pca, HandComputedToy) {
  // Centered points (-1,-1), (1,-1), (0,2); covariance diag(1, 3) so the
  // eigenbasis is the coordinate axes up to sign and every L1 norm is 2.
  Eigen::MatrixXd pts(3, 2);
  pts << 0, 0, 2, 0, 1, 3;
  const Eigen::VectorXd s = vpr::pca_distinctiveness(pts);
  ASSERT_EQ(s.size(), 3);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s[i], 2.0, 1e-12);
}

TEST(Pca, MatchesClosedFormTwoDimensionalOracle) {
  std::mt19937 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixX2d pts(3 + trial % 20, 2);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const double a = n(rng), b = n(rng);
      pts.row(i) << 2.0 * a + 0.5 * b, 0.3 * a - b;
    }
    const Eigen::VectorXd got = vpr::pca_distinctiveness(pts);
    const Eigen::VectorXd want = pca_scores_2d(pts);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Pca, SymmetryIdentityAndPermutation) {
  Eigen::MatrixXd sym(2, 4);
  sym << 1, 2, 3, 4, -1, 0, 5, 2;
  const Eigen::VectorXd s = vpr::pca_distinctiveness(sym);
  EXPECT_NEAR(s[0], s[1], 1e-12);

  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(5, 6, 0.3);
  EXPECT_LT(vpr::pca_distinctiveness(same).cwiseAbs().maxCoeff(), 1e-12);

  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  vpr::DescriptorMatrix d(30, vpr::kDescriptorDim);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = u(rng);
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  vpr::DescriptorMatrix p(30, vpr::kDescriptorDim);
  for (int i = 0; i < 30; ++i) p.row(i) = d.row(perm[i]);
  const Eigen::VectorXd sd = vpr::pca_distinctiveness(d), sp = vpr::pca_distinctiveness(p);
  for (int i = 0; i < 30; ++i) EXPECT_NEAR(sp[i], sd[perm[i]], 1e-8);
}

TEST(Pca, NeedsTwoDescriptors) {
  EXPECT_EQ(code_of([] { vpr::pca_distinctiveness(Eigen::MatrixXd::Ones(1, 4)); }), ErrorCode::TooFewDescriptors);
}

TEST(Landmarks, AllKeypointsInOneSuperpixel) {
  const vpr::SuperpixelMap sp = tile_map(4, 2, 16);
  const vpr::RegionTree tree = vpr::build_region_tree(sp, constant_lab(64, 32));
  const vpr::FeatureSet fs = keypoints_at({{20, 3}, {21, 4}, {22, 5}, {25, 10}, {30, 14}, {17, 1}});
  Eigen::VectorXd scores(6);
  scores << 0.5, 1.0, 1.5, 2.0, 2.5, 3.0;
  const vpr::LandmarkSelection sel = vpr::select_landmarks(tree, sp, fs, scores, 1);
  ASSERT_EQ(sel.landmarks.size(), 1u);
  const vpr::LandmarkRegion& lm = sel.landmarks[0];
  EXPECT_NEAR(lm.saliency, scores.sum(), 1e-9);
  EXPECT_EQ(lm.member_keypoints, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  // Every eligible node ties on saliency; the leaf has the smallest id.
  EXPECT_EQ(lm.region_id, 1);
  const auto& members = tree.nodes[lm.region_id].members;
  EXPECT_TRUE(std::binary_search(members.begin(), members.end(), 1));
}

TEST(Landmarks, ShortfallWhenTooFewEligible) {
  const vpr::SuperpixelMap sp = tile_map(8, 4, 16);
  const vpr::RegionTree tree = vpr::build_region_tree(sp, constant_lab(128, 64));
  std::vector<std::pair<double, double>> xy;
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> ux(0.0, 127.0), uy(0.0, 63.0);
  for (int i = 0; i < 60; ++i) xy.push_back({ux(rng), uy(rng)});
  const vpr::FeatureSet fs = keypoints_at(xy);
  Eigen::VectorXd scores = Eigen::VectorXd::LinSpaced(60, 0.1, 6.0);

  // Oracle: count nodes whose member superpixels hold at least 5 keypoints.
  int eligible = 0;
  for (const vpr::Region& r : tree.nodes) {
    int n = 0;
    for (const auto& kp : fs.keypoints) {
      const int label = vpr::keypoint_superpixel(kp, sp);
      n += std::binary_search(r.members.begin(), r.members.end(), label);
    }
    eligible += n >= 5;
  }
  const int k = eligible + 10;
  const vpr::LandmarkSelection sel = vpr::select_landmarks(tree, sp, fs, scores, k);
  EXPECT_EQ(sel.eligible, eligible);
  EXPECT_EQ(static_cast<int>(sel.landmarks.size()), eligible);
  EXPECT_EQ(sel.shortfall(), 10);
  EXPECT_EQ(sel.requested, k);

  for (const auto& lm : sel.landmarks) {
    double sum = 0.0;
    for (int i : lm.member_keypoints) sum += scores[i];
    EXPECT_NEAR(lm.saliency, sum, 1e-9);
    EXPECT_FALSE(lm.member_keypoints.empty());
    EXPECT_TRUE(std::is_sorted(lm.member_keypoints.begin(), lm.member_keypoints.end()));
  }
  for (std::size_t i = 1; i < sel.landmarks.size(); ++i) {
    EXPECT_GE(sel.landmarks[i - 1].saliency, sel.landmarks[i].saliency);
  }
}

TEST(Landmarks, SaliencyIsAdditiveOverChildren) {
  const vpr::SuperpixelMap sp = tile_map(6, 4, 16);
  vpr::Image img(96, 64);
  std::mt19937 rng(2);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng() % 256);
  const vpr::RegionTree tree = vpr::build_region_tree(sp, vpr::rgb_to_lab(img));
  std::vector<std::pair<double, double>> xy;
  std::uniform_real_distribution<double> ux(0.0, 95.0), uy(0.0, 63.0);
  for (int i = 0; i < 200; ++i) xy.push_back({ux(rng), uy(rng)});
  const vpr::FeatureSet fs = keypoints_at(xy);
  Eigen::VectorXd scores = Eigen::VectorXd::Random(200).cwiseAbs();
  const int all = static_cast<int>(tree.nodes.size());
  const vpr::LandmarkSelection sel = vpr::select_landmarks(tree, sp, fs, scores, all, 1);
  std::map<int, double> sal;
  for (const auto& lm : sel.landmarks) sal[lm.region_id] = lm.saliency;
  ASSERT_EQ(static_cast<int>(sal.size()), all);
  for (int id = tree.leaf_count; id < all; ++id) {
    const auto [a, b] = *tree.nodes[id].children;
    EXPECT_NEAR(sal[id], sal[a] + sal[b], 1e-9);
  }
  EXPECT_NEAR(sal[all - 1], scores.sum(), 1e-9);
  const auto again = vpr::select_landmarks(tree, sp, fs, scores, all, 1);
  for (std::size_t i = 0; i < sel.landmarks.size(); ++i) {
    EXPECT_EQ(again.landmarks[i].region_id, sel.landmarks[i].region_id);
  }
}

TEST(Landmarks, EqualSaliencyPrefersSmallerId) {
  const vpr::SuperpixelMap sp = tile_map(4, 1, 16);
  const vpr::RegionTree tree = vpr::build_region_tree(sp, constant_lab(64, 16));
  // Same total in superpixels 0 and 3, nothing elsewhere.
  const vpr::FeatureSet fs = keypoints_at({{2, 2}, {5, 5}, {60, 2}, {58, 9}});
  Eigen::VectorXd scores(4);
  scores << 1.0, 1.0, 1.5, 0.5;
  const vpr::LandmarkSelection sel = vpr::select_landmarks(tree, sp, fs, scores, 2, 2);
  ASSERT_GE(sel.landmarks.size(), 2u);
  // The root (sum 4) wins; then leaves 0 and 3 tie at 2 and leaf 0 goes first.
  EXPECT_EQ(sel.landmarks[0].region_id, 6);
  EXPECT_EQ(sel.landmarks[1].region_id, 0);
  const auto three = vpr::select_landmarks(tree, sp, fs, scores, 7, 2);
  std::vector<int> ids;
  for (const auto& lm : three.landmarks) ids.push_back(lm.region_id);
  auto pos0 = std::find(ids.begin(), ids.end(), 0), pos3 = std::find(ids.begin(), ids.end(), 3);
  ASSERT_NE(pos3, ids.end());
  EXPECT_LT(pos0, pos3);
}

TEST(Landmarks, Errors) {
  const vpr::SuperpixelMap sp = tile_map(2, 1, 16);
  const vpr::RegionTree tree = vpr::build_region_tree(sp, constant_lab(32, 16));
  const vpr::FeatureSet fs = keypoints_at({{1, 1}, {2, 2}});
  const Eigen::VectorXd two = Eigen::VectorXd::Ones(2);
  EXPECT_EQ(code_of([&] { vpr::select_landmarks(tree, sp, fs, two, 1); }), ErrorCode::NoCandidates);
  EXPECT_EQ(code_of([&] { vpr::select_landmarks(tree, sp, fs, Eigen::VectorXd::Ones(3), 1, 1); }),
            ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { vpr::select_landmarks(tree, sp, fs, two, 0, 1); }), ErrorCode::InvalidParams);
}

TEST(Landmarks, KeypointPositionsRoundToTheirPixel) {
  const vpr::SuperpixelMap sp = tile_map(2, 1, 16);
  EXPECT_EQ(vpr::keypoint_superpixel({15.4, 3, 1, 0, 0}, sp), 0);
  EXPECT_EQ(vpr::keypoint_superpixel({15.6, 3, 1, 0, 0}, sp), 1);
  EXPECT_EQ(vpr::keypoint_superpixel({31.9, 15.9, 1, 0, 0}, sp), 1);
}
