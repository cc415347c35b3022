#include "vpr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "vpr/error.hpp"

namespace vpr {

namespace {

using Rng = std::mt19937_64;

Rng stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return Rng(seq);
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
float uniform(Rng& rng, float lo, float hi) { return std::uniform_real_distribution<float>(lo, hi)(rng); }

Eigen::Vector3f random_color(Rng& rng, float lo = 20.0f, float hi = 235.0f) {
  const float r = uniform(rng, lo, hi);
  const float g = uniform(rng, lo, hi);
  const float b = uniform(rng, lo, hi);
  return {r, g, b};
}

float luma(const Eigen::Vector3f& c) { return 0.299f * c.x() + 0.587f * c.y() + 0.114f * c.z(); }

Eigen::Vector3f clamp_color(const Eigen::Vector3f& c) { return c.cwiseMax(0.0f).cwiseMin(255.0f); }

// Bilinear value noise on a (cells + 1)^2 lattice of random colour offsets.
std::vector<Eigen::Vector3f> value_noise(Rng& rng, int size, int cells) {
  std::vector<Eigen::Vector3f> lattice((cells + 1) * (cells + 1));
  for (auto& v : lattice) v = {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
  std::vector<Eigen::Vector3f> out(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const float gx = static_cast<float>(x) * cells / size, gy = static_cast<float>(y) * cells / size;
      const int ix = std::min(static_cast<int>(gx), cells - 1), iy = std::min(static_cast<int>(gy), cells - 1);
      const float fx = gx - ix, fy = gy - iy;
      auto node = [&](int a, int b) { return lattice[b * (cells + 1) + a]; };
      out[y * size + x] = (1 - fx) * (1 - fy) * node(ix, iy) + fx * (1 - fy) * node(ix + 1, iy) +
                          (1 - fx) * fy * node(ix, iy + 1) + fx * fy * node(ix + 1, iy + 1);
    }
  }
  return out;
}

Patch make_patch(Rng& rng) {
  Patch p;
  p.kind = static_cast<PatchKind>(uniform_int(rng, 0, 2));
  p.size = uniform_int(rng, 28, 44);
  p.pixels.resize(static_cast<std::size_t>(p.size) * p.size);
  switch (p.kind) {
    case PatchKind::NoiseTexture: {
      const Eigen::Vector3f base = random_color(rng, 70.0f, 185.0f);
      const float amp = uniform(rng, 70.0f, 110.0f);
      const auto coarse = value_noise(rng, p.size, uniform_int(rng, 3, 5));
      const auto fine = value_noise(rng, p.size, uniform_int(rng, 7, 10));
      for (std::size_t i = 0; i < p.pixels.size(); ++i) {
        p.pixels[i] = clamp_color(base + amp * coarse[i] + 0.5f * amp * fine[i]);
      }
      break;
    }
    case PatchKind::GradientBlobs: {
      const Eigen::Vector3f base = random_color(rng);
      std::fill(p.pixels.begin(), p.pixels.end(), base);
      const int blobs = uniform_int(rng, 3, 5);
      for (int b = 0; b < blobs; ++b) {
        const float cx = uniform(rng, 0.15f, 0.85f) * p.size, cy = uniform(rng, 0.15f, 0.85f) * p.size;
        const float sigma = uniform(rng, p.size / 10.0f, p.size / 5.0f);
        Eigen::Vector3f color = random_color(rng);
        if (std::abs(luma(color) - luma(base)) < 60.0f) color = clamp_color(Eigen::Vector3f::Constant(255.0f) - base);
        for (int y = 0; y < p.size; ++y) {
          for (int x = 0; x < p.size; ++x) {
            const float d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            const float alpha = std::exp(-d2 / (2.0f * sigma * sigma));
            auto& px = p.pixels[y * p.size + x];
            px = (1.0f - alpha) * px + alpha * color;
          }
        }
      }
      break;
    }
    case PatchKind::Checker: {
      const int cell = uniform_int(rng, 4, 8);
      const Eigen::Vector3f a = random_color(rng);
      Eigen::Vector3f b = random_color(rng);
      if (std::abs(luma(a) - luma(b)) < 80.0f) b = clamp_color(Eigen::Vector3f::Constant(255.0f) - a);
      const int ox = uniform_int(rng, 0, cell - 1), oy = uniform_int(rng, 0, cell - 1);
      for (int y = 0; y < p.size; ++y) {
        for (int x = 0; x < p.size; ++x) {
          p.pixels[y * p.size + x] = (((x + ox) / cell + (y + oy) / cell) % 2 == 0) ? a : b;
        }
      }
      break;
    }
  }
  return p;
}

SceneLayout make_scene(Rng& rng, const SynthParams& params, const std::vector<Patch>& pool) {
  SceneLayout s;
  s.background_top = random_color(rng, 40.0f, 215.0f);
  s.background_bottom = random_color(rng, 40.0f, 215.0f);
  s.background_side = Eigen::Vector3f(uniform(rng, -30, 30), uniform(rng, -30, 30), uniform(rng, -30, 30));
  for (int d = 0; d < params.n_distractors; ++d) {
    s.distractors.push_back(make_patch(rng));
    const int size = s.distractors.back().size;
    s.patches.push_back({true, d, uniform_int(rng, 0, params.width - size), uniform_int(rng, 0, params.height - size)});
  }
  std::vector<int> ids(pool.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int i = 0; i < params.patches_per_image; ++i) {
    const int size = pool[ids[i]].size;
    s.patches.push_back({false, ids[i], uniform_int(rng, 0, params.width - size), uniform_int(rng, 0, params.height - size)});
  }
  return s;
}

std::string numbered(const std::string& prefix, int i, int count) {
  int digits = 3;
  for (int n = count - 1; n >= 1000; n /= 10) ++digits;
  std::ostringstream os;
  os << prefix << std::setw(digits) << std::setfill('0') << i;
  return os.str();
}

void validate(const SynthParams& p) {
  if (p.n_library < 1 || p.n_database < 1 || p.n_query < 1 || p.n_distractors < 0 || p.pool_size < 2 ||
      p.patches_per_image < 1 || p.max_shift < 0 || p.max_brightness_change < 0.0) {
    throw Error(ErrorCode::InvalidParams, "synthetic dataset parameters must be positive");
  }
  if (p.width < 64 || p.height < 64) throw Error(ErrorCode::InvalidParams, "synthetic images must be at least 64x64");
  if (p.n_query > p.n_database) throw Error(ErrorCode::InvalidParams, "each query needs its own database image");
  if (p.patches_per_image >= p.pool_size) {
    throw Error(ErrorCode::InvalidParams, "patch pool must be larger than the patches per image");
  }
  if (p.width < 44 + p.max_shift || p.height < 44 + p.max_shift) {
    throw Error(ErrorCode::InvalidParams, "image too small for the patch sizes");
  }
}

}  // namespace

SyntheticDataset generate_synthetic_layouts(std::uint64_t seed, const SynthParams& params) {
  validate(params);
  SyntheticDataset ds;
  ds.params = params;
  ds.seed = seed;

  Rng pool_rng = stream(seed, 1);
  for (int i = 0; i < params.pool_size; ++i) ds.pool.push_back(make_patch(pool_rng));

  Rng lib_rng = stream(seed, 2);
  for (int i = 0; i < params.n_library; ++i) {
    ds.library_ids.push_back(numbered("lib_", i, params.n_library));
    ds.library.push_back(make_scene(lib_rng, params, ds.pool));
  }
  Rng db_rng = stream(seed, 3);
  for (int i = 0; i < params.n_database; ++i) {
    ds.database_ids.push_back(numbered("db_", i, params.n_database));
    ds.database.push_back(make_scene(db_rng, params, ds.pool));
  }

  Rng q_rng = stream(seed, 4);
  std::vector<int> sources(params.n_database);
  std::iota(sources.begin(), sources.end(), 0);
  std::shuffle(sources.begin(), sources.end(), q_rng);
  for (int i = 0; i < params.n_query; ++i) {
    SyntheticQuery q;
    q.id = numbered("q_", i, params.n_query);
    q.source = sources[i];
    q.layout = ds.database[q.source];
    q.layout.shift_x = uniform_int(q_rng, -params.max_shift, params.max_shift);
    q.layout.shift_y = uniform_int(q_rng, -params.max_shift, params.max_shift);
    q.layout.brightness = 1.0 + std::uniform_real_distribution<double>(-params.max_brightness_change,
                                                                        params.max_brightness_change)(q_rng);
    std::vector<int> pool_slots;
    for (std::size_t k = 0; k < q.layout.patches.size(); ++k) {
      if (!q.layout.patches[k].distractor) pool_slots.push_back(static_cast<int>(k));
    }
    q.swapped_patch = pool_slots[uniform_int(q_rng, 0, static_cast<int>(pool_slots.size()) - 1)];
    std::vector<int> unused;
    for (int p = 0; p < params.pool_size; ++p) {
      const bool present = std::any_of(q.layout.patches.begin(), q.layout.patches.end(),
                                       [&](const PlacedPatch& pp) { return !pp.distractor && pp.index == p; });
      if (!present) unused.push_back(p);
    }
    q.layout.patches[q.swapped_patch].index = unused[uniform_int(q_rng, 0, static_cast<int>(unused.size()) - 1)];
    ds.queries.push_back(std::move(q));
  }
  return ds;
}

Image render_scene(const SceneLayout& layout, const std::vector<Patch>& pool, int width, int height) {
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int sx = x - layout.shift_x, sy = y - layout.shift_y;
      Eigen::Vector3f c = layout.background_top +
                          (layout.background_bottom - layout.background_top) * (static_cast<float>(sy) / (height - 1)) +
                          layout.background_side * (static_cast<float>(sx) / (width - 1) - 0.5f);
      for (auto it = layout.patches.rbegin(); it != layout.patches.rend(); ++it) {
        const Patch& p = it->distractor ? layout.distractors[it->index] : pool[it->index];
        const int px = sx - it->x, py = sy - it->y;
        if (px >= 0 && py >= 0 && px < p.size && py < p.size) {
          c = p.at(px, py);
          break;
        }
      }
      c = clamp_color(c * static_cast<float>(layout.brightness));
      std::uint8_t* out = img.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) out[ch] = static_cast<std::uint8_t>(std::lround(c[ch]));
    }
  }
  return img;
}

SyntheticDataset generate_synthetic_dataset(std::uint64_t seed, const SynthParams& params,
                                            const std::filesystem::path& root) {
  SyntheticDataset ds = generate_synthetic_layouts(seed, params);
  namespace fs = std::filesystem;
  for (const char* sub : {"library", "database", "query"}) fs::create_directories(root / sub);
  for (std::size_t i = 0; i < ds.library.size(); ++i) {
    save_png(render_scene(ds.library[i], ds.pool, params.width, params.height), root / "library" / (ds.library_ids[i] + ".png"));
  }
  for (std::size_t i = 0; i < ds.database.size(); ++i) {
    save_png(render_scene(ds.database[i], ds.pool, params.width, params.height),
             root / "database" / (ds.database_ids[i] + ".png"));
  }
  std::ofstream gt(root / "ground_truth.csv");
  if (!gt) throw Error(ErrorCode::IoError, "cannot write ground truth under " + root.string());
  gt << "query_id,relevant_db_id\n";
  for (const SyntheticQuery& q : ds.queries) {
    save_png(render_scene(q.layout, ds.pool, params.width, params.height), root / "query" / (q.id + ".png"));
    gt << q.id << ',' << ds.database_ids[q.source] << '\n';
  }
  return ds;
}

}  // namespace vpr
