#include "vpr/encoding.hpp"

#include <random>

namespace vpr {

namespace {

double assign(const DescriptorMatrix& points, const DescriptorMatrix& centroids, std::vector<int>& assignments,
              std::vector<double>& distances) {
  double objective = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int c = nearest_centroid(centroids, points.row(i));
    assignments[i] = c;
    distances[i] = (centroids.row(c) - points.row(i)).squaredNorm();
    objective += distances[i];
  }
  return objective;
}

DescriptorMatrix seed_plus_plus(const DescriptorMatrix& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  DescriptorMatrix centroids(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));
  Eigen::VectorXd d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    if (!(total > 0.0)) {
      throw Error(ErrorCode::TooFewDescriptors, "fewer than " + std::to_string(k) + " distinct descriptors");
    }
    std::uniform_real_distribution<double> pick(0.0, total);
    const double r = pick(rng);
    Eigen::Index chosen = -1;
    double cumulative = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      cumulative += d2[i];
      chosen = i;
      if (cumulative > r) break;
    }
    centroids.row(c) = points.row(chosen);
    d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const DescriptorMatrix& points, int k, std::uint64_t seed, int max_iterations) {
  if (k < 2) throw Error(ErrorCode::InvalidParams, "codebook needs k >= 2");
  if (points.rows() < k) {
    throw Error(ErrorCode::TooFewDescriptors,
                std::to_string(points.rows()) + " descriptors for " + std::to_string(k) + " centroids");
  }
  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.codebook.seed = seed;
  DescriptorMatrix& centroids = result.codebook.centroids;
  centroids = seed_plus_plus(points, k, rng);

  const Eigen::Index n = points.rows();
  std::vector<int>& assignments = result.assignments;
  assignments.assign(n, -1);
  std::vector<int> previous;
  std::vector<double> distances(n);
  for (int iter = 0; iter < max_iterations; ++iter) {
    previous = assignments;
    result.objective.push_back(assign(points, centroids, assignments, distances));
    result.iterations = iter + 1;
    if (assignments == previous) {
      result.converged = true;
      break;
    }

    DescriptorMatrix sums = DescriptorMatrix::Zero(k, points.cols());
    std::vector<long> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assignments[i]) += points.row(i);
      ++counts[assignments[i]];
    }
    std::vector<bool> used(n, false);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!used[i] && (far < 0 || distances[i] > distances[far])) far = i;
      }
      used[far] = true;
      centroids.row(c) = points.row(far);
    }
  }
  if (!result.converged) {
    result.objective.push_back(assign(points, centroids, assignments, distances));
  }
  return result;
}

double vlad_distance(const VladCode& a, const VladCode& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "VLAD lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  return (a - b).norm();
}

}  // namespace vpr
