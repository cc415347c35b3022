#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "vpr/error.hpp"
#include "vpr/image.hpp"
#include "vpr/segmentation.hpp"

namespace vpr {

inline constexpr int kDescriptorDim = 128;

using DescriptorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 0.0;        // Gaussian sigma in input-image pixels
  double orientation = 0.0;  // radians, [-pi, pi)
  double response = 0.0;     // DoG value at detection

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Keypoints with their descriptors stored as the rows of a matrix.
struct FeatureSet {
  std::vector<Keypoint> keypoints;
  DescriptorMatrix descriptors = DescriptorMatrix(0, kDescriptorDim);

  std::size_t size() const noexcept { return keypoints.size(); }
  bool empty() const noexcept { return keypoints.empty(); }
};

struct SiftParams {
  int octaves = 3;
  int scales_per_octave = 3;
  double base_sigma = 1.6;
  double assumed_blur = 0.5;
  // Minimum |DoG| on intensities scaled to [0, 1].
  double contrast_threshold = 0.04 / 3.0;
  int border = 4;
  // Strongest responses kept when positive; 0 keeps every detection.
  int max_keypoints = 0;
};

/// Difference-of-Gaussians detector with a 4x4x8 gradient-histogram
/// descriptor. Self-consistent rather than bit-compatible with any published
/// SIFT: there is no scale-space interpolation and no edge rejection.
FeatureSet detect_and_describe(const GrayImage& gray, const SiftParams& params = {});

/// Distinctiveness of each row: the L1 norm of the centered row expressed in
/// the full PCA basis of the set.
template <typename Derived>
Eigen::VectorXd pca_distinctiveness(const Eigen::MatrixBase<Derived>& descriptors) {
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
  if (descriptors.rows() < 2) {
    throw Error(ErrorCode::TooFewDescriptors, "PCA needs at least two descriptors");
  }
  const Matrix x = descriptors.template cast<double>();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean;
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  return (centered * eig.eigenvectors()).cwiseAbs().rowwise().sum();
}

struct LandmarkRegion {
  int region_id = 0;
  double saliency = 0.0;
  std::vector<int> member_keypoints;  // indices into the FeatureSet, ascending
};

struct LandmarkSelection {
  std::vector<LandmarkRegion> landmarks;
  int requested = 0;
  int eligible = 0;

  int shortfall() const noexcept { return requested - static_cast<int>(landmarks.size()); }
};

/// Superpixel containing the rounded keypoint position.
int keypoint_superpixel(const Keypoint& kp, const SuperpixelMap& sp);

/// Ranks every tree node by the summed distinctiveness of the keypoints it
/// contains and returns the top `k`. Nodes with fewer than `min_keypoints`
/// keypoints are skipped; ties go to the smaller region id.
LandmarkSelection select_landmarks(const RegionTree& tree, const SuperpixelMap& sp, const FeatureSet& fs,
                                   const Eigen::VectorXd& scores, int k, int min_keypoints = 5);

}  // namespace vpr
