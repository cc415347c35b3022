#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vpr/error.hpp"
#include "vpr/features.hpp"

namespace vpr {

inline constexpr int kDefaultCodebookSize = 16;

/// k x dim centroid matrix, one centroid per row.
struct Codebook {
  DescriptorMatrix centroids;
  std::uint64_t seed = 0;

  int k() const noexcept { return static_cast<int>(centroids.rows()); }
  int dim() const noexcept { return static_cast<int>(centroids.cols()); }
};

/// Flattened cluster-major residual aggregate, length k * dim.
using VladCode = Eigen::VectorXd;

struct KMeansResult {
  Codebook codebook;
  std::vector<int> assignments;
  // Sum of squared distances after each assignment step.
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iterations` is reached. Clusters that empty out are
/// re-seeded with the point farthest from its centroid.
KMeansResult kmeans(const DescriptorMatrix& points, int k, std::uint64_t seed, int max_iterations = 100);

inline Codebook train_codebook(const DescriptorMatrix& points, int k, std::uint64_t seed) {
  return kmeans(points, k, seed).codebook;
}

/// Index of the nearest row of `centroids`; ties go to the lower index.
template <typename Derived>
int nearest_centroid(const DescriptorMatrix& centroids, const Eigen::MatrixBase<Derived>& point) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

/// Residuals to the nearest centroid summed per cluster, then signed square
/// root and global L2 normalization. An empty set encodes to zeros.
template <typename Derived>
VladCode vlad_encode(const Eigen::MatrixBase<Derived>& descriptors, const Codebook& cb) {
  const Eigen::Index dim = cb.dim();
  VladCode code = VladCode::Zero(cb.k() * dim);
  if (descriptors.rows() == 0) return code;
  if (descriptors.cols() != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "descriptor dim " + std::to_string(descriptors.cols()) + " vs codebook dim " + std::to_string(dim));
  }
  for (Eigen::Index i = 0; i < descriptors.rows(); ++i) {
    const auto d = descriptors.row(i).template cast<double>();
    const int c = nearest_centroid(cb.centroids, d);
    code.segment(c * dim, dim) += (d - cb.centroids.row(c)).transpose();
  }
  code = code.unaryExpr([](double v) { return std::copysign(std::sqrt(std::abs(v)), v); });
  const double norm = code.norm();
  if (norm > 0.0) code /= norm;
  return code;
}

double vlad_distance(const VladCode& a, const VladCode& b);

}  // namespace vpr
