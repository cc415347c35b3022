#include "vpr/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace vpr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kOrientationBins = 36;
constexpr int kCells = 4;
constexpr int kCellBins = 8;
constexpr double kDescriptorClip = 0.2;

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

GrayMatrix gaussian_blur(const GrayMatrix& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double sum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& k : kernel) k /= sum;

  const int rows = static_cast<int>(src.rows()), cols = static_cast<int>(src.cols());
  GrayMatrix tmp(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * src(y, reflect(x + i, cols));
      tmp(y, x) = acc;
    }
  }
  GrayMatrix out(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp(reflect(y + i, rows), x);
      out(y, x) = acc;
    }
  }
  return out;
}

GrayMatrix downsample(const GrayMatrix& src) {
  GrayMatrix out((src.rows() + 1) / 2, (src.cols() + 1) / 2);
  for (Eigen::Index y = 0; y < out.rows(); ++y) {
    for (Eigen::Index x = 0; x < out.cols(); ++x) out(y, x) = src(2 * y, 2 * x);
  }
  return out;
}

struct Octave {
  std::vector<GrayMatrix> gaussians;
  std::vector<GrayMatrix> dogs;
  double scale = 1.0;  // input pixels per octave pixel
};

std::vector<Octave> build_pyramid(const GrayImage& gray, const SiftParams& p) {
  const int levels = p.scales_per_octave + 3;
  const double k = std::pow(2.0, 1.0 / p.scales_per_octave);
  std::vector<double> sigma(levels);
  for (int i = 0; i < levels; ++i) sigma[i] = p.base_sigma * std::pow(k, i);

  std::vector<Octave> pyramid;
  GrayMatrix base = gaussian_blur(gray.values / 255.0,
                                  std::sqrt(std::max(p.base_sigma * p.base_sigma - p.assumed_blur * p.assumed_blur, 0.01)));
  double scale = 1.0;
  const int min_side = 2 * p.border + 3;
  for (int o = 0; o < p.octaves; ++o) {
    if (base.rows() < min_side || base.cols() < min_side) break;
    Octave oct;
    oct.scale = scale;
    oct.gaussians.push_back(base);
    for (int i = 1; i < levels; ++i) {
      oct.gaussians.push_back(
          gaussian_blur(oct.gaussians.back(), std::sqrt(sigma[i] * sigma[i] - sigma[i - 1] * sigma[i - 1])));
    }
    for (int i = 0; i + 1 < levels; ++i) oct.dogs.push_back(oct.gaussians[i + 1] - oct.gaussians[i]);
    base = downsample(oct.gaussians[p.scales_per_octave]);
    scale *= 2.0;
    pyramid.push_back(std::move(oct));
  }
  return pyramid;
}

bool is_extremum(const Octave& oct, int level, int x, int y) {
  const double v = oct.dogs[level](y, x);
  const bool maximum = v > 0;
  for (int l = level - 1; l <= level + 1; ++l) {
    const GrayMatrix& d = oct.dogs[l];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (l == level && dx == 0 && dy == 0) continue;
        const double n = d(y + dy, x + dx);
        if (maximum ? n > v : n < v) return false;
      }
    }
  }
  return true;
}

double parabola_offset(double left, double center, double right) {
  const double denom = left - 2.0 * center + right;
  if (std::abs(denom) < 1e-12) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

double dominant_orientation(const GrayMatrix& g, int x, int y, double sigma) {
  const double weight_sigma = 1.5 * sigma;
  const int radius = static_cast<int>(std::round(3.0 * weight_sigma));
  std::array<double, kOrientationBins> hist{};
  const int rows = static_cast<int>(g.rows()), cols = static_cast<int>(g.cols());
  for (int dy = -radius; dy <= radius; ++dy) {
    const int yy = y + dy;
    if (yy <= 0 || yy >= rows - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int xx = x + dx;
      if (xx <= 0 || xx >= cols - 1) continue;
      const double gx = g(yy, xx + 1) - g(yy, xx - 1);
      const double gy = g(yy + 1, xx) - g(yy - 1, xx);
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * weight_sigma * weight_sigma));
      const double angle = std::atan2(gy, gx);
      int bin = static_cast<int>(std::floor((angle + kPi) / (2.0 * kPi) * kOrientationBins));
      bin = (bin % kOrientationBins + kOrientationBins) % kOrientationBins;
      hist[bin] += w * std::hypot(gx, gy);
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kOrientationBins> smoothed{};
    for (int b = 0; b < kOrientationBins; ++b) {
      smoothed[b] = 0.25 * hist[(b + kOrientationBins - 1) % kOrientationBins] + 0.5 * hist[b] +
                    0.25 * hist[(b + 1) % kOrientationBins];
    }
    hist = smoothed;
  }
  const int peak = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  const double offset = parabola_offset(hist[(peak + kOrientationBins - 1) % kOrientationBins], hist[peak],
                                        hist[(peak + 1) % kOrientationBins]);
  double angle = (peak + 0.5 + offset) / kOrientationBins * 2.0 * kPi - kPi;
  if (angle >= kPi) angle -= 2.0 * kPi;
  if (angle < -kPi) angle += 2.0 * kPi;
  return angle;
}

Eigen::Matrix<double, 1, kDescriptorDim> describe(const GrayMatrix& g, int x, int y, double sigma, double orientation) {
  Eigen::Matrix<double, 1, kDescriptorDim> desc = Eigen::Matrix<double, 1, kDescriptorDim>::Zero();
  const double cell_width = 3.0 * sigma;
  const int radius = static_cast<int>(std::round(cell_width * std::sqrt(2.0) * (kCells + 1) * 0.5));
  const double cos_o = std::cos(orientation), sin_o = std::sin(orientation);
  const double window_sigma = 0.5 * kCells;
  const int rows = static_cast<int>(g.rows()), cols = static_cast<int>(g.cols());

  for (int dy = -radius; dy <= radius; ++dy) {
    const int yy = y + dy;
    if (yy <= 0 || yy >= rows - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int xx = x + dx;
      if (xx <= 0 || xx >= cols - 1) continue;
      const double rx = (cos_o * dx + sin_o * dy) / cell_width;
      const double ry = (-sin_o * dx + cos_o * dy) / cell_width;
      const double cbin = rx + 0.5 * kCells - 0.5;
      const double rbin = ry + 0.5 * kCells - 0.5;
      if (cbin <= -1.0 || cbin >= kCells || rbin <= -1.0 || rbin >= kCells) continue;

      const double gx = g(yy, xx + 1) - g(yy, xx - 1);
      const double gy = g(yy + 1, xx) - g(yy - 1, xx);
      const double magnitude = std::hypot(gx, gy) * std::exp(-(rx * rx + ry * ry) / (2.0 * window_sigma * window_sigma));
      double rel = std::atan2(gy, gx) - orientation;
      while (rel < 0.0) rel += 2.0 * kPi;
      while (rel >= 2.0 * kPi) rel -= 2.0 * kPi;
      const double obin = rel / (2.0 * kPi) * kCellBins;

      const int r0 = static_cast<int>(std::floor(rbin)), c0 = static_cast<int>(std::floor(cbin));
      const int o0 = static_cast<int>(std::floor(obin));
      const double fr = rbin - r0, fc = cbin - c0, fo = obin - o0;
      for (int ir = 0; ir <= 1; ++ir) {
        const int r = r0 + ir;
        if (r < 0 || r >= kCells) continue;
        const double wr = ir ? fr : 1.0 - fr;
        for (int ic = 0; ic <= 1; ++ic) {
          const int c = c0 + ic;
          if (c < 0 || c >= kCells) continue;
          const double wc = ic ? fc : 1.0 - fc;
          for (int io = 0; io <= 1; ++io) {
            const int o = (o0 + io) % kCellBins;
            const double wo = io ? fo : 1.0 - fo;
            desc((r * kCells + c) * kCellBins + o) += magnitude * wr * wc * wo;
          }
        }
      }
    }
  }

  const double norm = desc.norm();
  if (norm < 1e-12) return Eigen::Matrix<double, 1, kDescriptorDim>::Zero();
  desc /= norm;
  desc = desc.cwiseMin(kDescriptorClip);
  const double renorm = desc.norm();
  if (renorm < 1e-12) return Eigen::Matrix<double, 1, kDescriptorDim>::Zero();
  return desc / renorm;
}

struct Detection {
  Keypoint keypoint;
  int octave = 0;
  int level = 0;
  int x = 0;
  int y = 0;
};

}  // namespace

FeatureSet detect_and_describe(const GrayImage& gray, const SiftParams& params) {
  const std::vector<Octave> pyramid = build_pyramid(gray, params);
  const double k = std::pow(2.0, 1.0 / params.scales_per_octave);
  const double prefilter = 0.5 * params.contrast_threshold;

  std::vector<Detection> detections;
  for (int o = 0; o < static_cast<int>(pyramid.size()); ++o) {
    const Octave& oct = pyramid[o];
    for (int level = 1; level <= params.scales_per_octave; ++level) {
      const GrayMatrix& d = oct.dogs[level];
      const int rows = static_cast<int>(d.rows()), cols = static_cast<int>(d.cols());
      for (int y = params.border; y < rows - params.border; ++y) {
        for (int x = params.border; x < cols - params.border; ++x) {
          const double v = d(y, x);
          if (std::abs(v) < std::max(prefilter, params.contrast_threshold)) continue;
          if (!is_extremum(oct, level, x, y)) continue;
          const double ox = parabola_offset(d(y, x - 1), v, d(y, x + 1));
          const double oy = parabola_offset(d(y - 1, x), v, d(y + 1, x));
          Detection det;
          det.octave = o;
          det.level = level;
          det.x = x;
          det.y = y;
          det.keypoint.x = std::clamp((x + ox) * oct.scale, 0.0, gray.width() - 1.0);
          det.keypoint.y = std::clamp((y + oy) * oct.scale, 0.0, gray.height() - 1.0);
          det.keypoint.scale = params.base_sigma * std::pow(k, level) * oct.scale;
          det.keypoint.response = v;
          // Flat-topped extrema fire on neighbouring pixels that refine to the same point.
          if (std::any_of(detections.rbegin(), detections.rend(), [&](const Detection& other) {
                return other.octave == o && other.level == level &&
                       std::abs(other.keypoint.x - det.keypoint.x) < 1e-6 &&
                       std::abs(other.keypoint.y - det.keypoint.y) < 1e-6;
              })) {
            continue;
          }
          detections.push_back(det);
        }
      }
    }
  }

  if (params.max_keypoints > 0 && static_cast<int>(detections.size()) > params.max_keypoints) {
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(detections[a].keypoint.response) > std::abs(detections[b].keypoint.response);
    });
    order.resize(params.max_keypoints);
    std::sort(order.begin(), order.end());
    std::vector<Detection> kept;
    kept.reserve(order.size());
    for (std::size_t i : order) kept.push_back(detections[i]);
    detections = std::move(kept);
  }

  FeatureSet fs;
  fs.descriptors.resize(static_cast<Eigen::Index>(detections.size()), kDescriptorDim);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    Detection& det = detections[i];
    const GrayMatrix& g = pyramid[det.octave].gaussians[det.level];
    const double sigma = params.base_sigma * std::pow(k, det.level);
    det.keypoint.orientation = dominant_orientation(g, det.x, det.y, sigma);
    fs.descriptors.row(static_cast<Eigen::Index>(i)) = describe(g, det.x, det.y, sigma, det.keypoint.orientation);
    fs.keypoints.push_back(det.keypoint);
  }
  return fs;
}

int keypoint_superpixel(const Keypoint& kp, const SuperpixelMap& sp) {
  const int x = std::clamp(static_cast<int>(std::lround(kp.x)), 0, sp.width - 1);
  const int y = std::clamp(static_cast<int>(std::lround(kp.y)), 0, sp.height - 1);
  return sp.label(x, y);
}

LandmarkSelection select_landmarks(const RegionTree& tree, const SuperpixelMap& sp, const FeatureSet& fs,
                                   const Eigen::VectorXd& scores, int k, int min_keypoints) {
  if (k < 1) throw Error(ErrorCode::InvalidParams, "K must be positive");
  if (static_cast<std::size_t>(scores.size()) != fs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one distinctiveness score per keypoint required");
  }
  std::vector<std::vector<int>> by_superpixel(sp.count);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    by_superpixel[keypoint_superpixel(fs.keypoints[i], sp)].push_back(static_cast<int>(i));
  }

  // Leaves in id order come before their ancestors, so a single forward pass
  // accumulates every internal node from its children.
  const std::size_t n = tree.nodes.size();
  std::vector<double> saliency(n, 0.0);
  std::vector<std::vector<int>> members(n);
  for (std::size_t id = 0; id < n; ++id) {
    const Region& r = tree.nodes[id];
    if (r.is_leaf()) {
      members[id] = by_superpixel[r.members.front()];
      for (int kp : members[id]) saliency[id] += scores[kp];
    } else {
      const auto [a, b] = *r.children;
      saliency[id] = saliency[a] + saliency[b];
      std::merge(members[a].begin(), members[a].end(), members[b].begin(), members[b].end(),
                 std::back_inserter(members[id]));
    }
  }

  std::vector<int> candidates;
  for (std::size_t id = 0; id < n; ++id) {
    if (static_cast<int>(members[id].size()) >= min_keypoints) candidates.push_back(static_cast<int>(id));
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::NoCandidates, "no region holds at least " + std::to_string(min_keypoints) + " keypoints");
  }
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    if (saliency[a] != saliency[b]) return saliency[a] > saliency[b];
    return a < b;
  });

  LandmarkSelection sel;
  sel.requested = k;
  sel.eligible = static_cast<int>(candidates.size());
  const std::size_t take = std::min<std::size_t>(k, candidates.size());
  for (std::size_t i = 0; i < take; ++i) {
    const int id = candidates[i];
    sel.landmarks.push_back({id, saliency[id], std::move(members[id])});
  }
  return sel;
}

}  // namespace vpr
