#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vpr/image.hpp"

namespace vpr {

struct SynthParams {
  int n_library = 100;
  int n_database = 100;
  int n_query = 50;
  int width = 160;
  int height = 120;
  int n_distractors = 1;  // image-specific patches per scene, never in the pool
  int pool_size = 40;
  int patches_per_image = 5;  // shared pool patches per scene
  int max_shift = 10;
  double max_brightness_change = 0.10;
};

enum class PatchKind { NoiseTexture, GradientBlobs, Checker };

/// Float RGB tile in [0, 255].
struct Patch {
  PatchKind kind = PatchKind::NoiseTexture;
  int size = 0;
  std::vector<Eigen::Vector3f> pixels;  // size x size, row-major

  const Eigen::Vector3f& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * size + x]; }
};

struct PlacedPatch {
  bool distractor = false;
  int index = 0;  // into the pool, or into SceneLayout::distractors
  int x = 0;      // top-left corner in scene coordinates
  int y = 0;

  friend bool operator==(const PlacedPatch&, const PlacedPatch&) = default;
};

/// Everything needed to render one image. Queries reuse their source layout
/// with a shift, a brightness factor and one pool patch swapped.
struct SceneLayout {
  Eigen::Vector3f background_top = Eigen::Vector3f::Zero();
  Eigen::Vector3f background_bottom = Eigen::Vector3f::Zero();
  Eigen::Vector3f background_side = Eigen::Vector3f::Zero();
  std::vector<PlacedPatch> patches;  // painted in order
  std::vector<Patch> distractors;
  int shift_x = 0;
  int shift_y = 0;
  double brightness = 1.0;
};

struct SyntheticQuery {
  std::string id;
  int source = 0;         // database index
  int swapped_patch = 0;  // position in SceneLayout::patches
  SceneLayout layout;
};

struct SyntheticDataset {
  SynthParams params;
  std::uint64_t seed = 0;
  std::vector<Patch> pool;
  std::vector<std::string> library_ids;
  std::vector<SceneLayout> library;
  std::vector<std::string> database_ids;
  std::vector<SceneLayout> database;
  std::vector<SyntheticQuery> queries;
};

SyntheticDataset generate_synthetic_layouts(std::uint64_t seed, const SynthParams& params);

/// Renders with the layout's own shift and brightness.
Image render_scene(const SceneLayout& layout, const std::vector<Patch>& pool, int width, int height);

/// Writes {library,database,query}/*.png and ground_truth.csv under `root`.
SyntheticDataset generate_synthetic_dataset(std::uint64_t seed, const SynthParams& params,
                                            const std::filesystem::path& root);

}  // namespace vpr
