#include "vpr/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>

#include "vpr/error.hpp"

namespace vpr {

namespace {

struct Center {
  Eigen::Vector3d lab;
  double x = 0.0;
  double y = 0.0;
};

// Grid with nx * ny as close as possible to the target and cells as square
// as possible; remaining ties prefer more columns.
std::pair<int, int> choose_grid(int width, int height, int target) {
  int best_nx = 1;
  int best_ny = target;
  auto key = [&](int nx, int ny) {
    const double aspect = std::abs(std::log((static_cast<double>(width) / nx) / (static_cast<double>(height) / ny)));
    return std::make_tuple(std::abs(nx * ny - target), aspect, -nx);
  };
  auto best_key = key(best_nx, best_ny);
  for (int nx = 1; nx <= target; ++nx) {
    for (int ny : {target / nx, target / nx + 1}) {
      if (ny < 1 || nx > width || ny > height) continue;
      const auto k = key(nx, ny);
      if (k < best_key) {
        best_key = k;
        best_nx = nx;
        best_ny = ny;
      }
    }
  }
  return {best_nx, best_ny};
}

double gradient_energy(const LabImage& img, int x, int y) {
  const int xl = std::max(x - 1, 0), xr = std::min(x + 1, img.width - 1);
  const int yu = std::max(y - 1, 0), yd = std::min(y + 1, img.height - 1);
  return (img.at(xr, y) - img.at(xl, y)).squaredNorm() + (img.at(x, yd) - img.at(x, yu)).squaredNorm();
}

// Flood-fills 4-connected components of equal label. comp[i] receives the
// component index of pixel i; returns per-component pixel lists.
std::vector<std::vector<int>> label_components(const std::vector<int>& labels, int width, int height,
                                               std::vector<int>& comp) {
  const int n = width * height;
  comp.assign(n, -1);
  std::vector<std::vector<int>> components;
  std::vector<int> stack;
  for (int start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.emplace_back();
    auto& pixels = components.back();
    stack.push_back(start);
    comp[start] = id;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      pixels.push_back(p);
      const int px = p % width, py = p / width;
      const int nbrs[4][2] = {{px - 1, py}, {px + 1, py}, {px, py - 1}, {px, py + 1}};
      for (const auto& q : nbrs) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= width || q[1] >= height) continue;
        const int qi = q[1] * width + q[0];
        if (comp[qi] < 0 && labels[qi] == labels[p]) {
          comp[qi] = id;
          stack.push_back(qi);
        }
      }
    }
  }
  return components;
}

// Keeps the largest component of every label and hands each remaining
// fragment to the main component it shares the longest border with.
void enforce_connectivity(std::vector<int>& labels, int width, int height) {
  while (true) {
    std::vector<int> comp;
    auto components = label_components(labels, width, height, comp);
    std::map<int, int> main_of_label;  // label -> component index
    for (int c = 0; c < static_cast<int>(components.size()); ++c) {
      const int lbl = labels[components[c].front()];
      auto it = main_of_label.find(lbl);
      if (it == main_of_label.end() || components[c].size() > components[it->second].size()) {
        main_of_label[lbl] = c;
      }
    }
    std::vector<bool> is_main(components.size(), false);
    for (const auto& [lbl, c] : main_of_label) is_main[c] = true;

    std::vector<int> fragments;
    for (int c = 0; c < static_cast<int>(components.size()); ++c) {
      if (!is_main[c]) fragments.push_back(c);
    }
    if (fragments.empty()) return;
    std::sort(fragments.begin(), fragments.end(), [&](int a, int b) {
      return std::make_pair(components[a].size(), a) < std::make_pair(components[b].size(), b);
    });

    std::vector<bool> touched(components.size(), false);
    bool progressed = false;
    for (int f : fragments) {
      std::map<int, int> border;  // main component -> shared edge count
      for (int p : components[f]) {
        const int px = p % width, py = p / width;
        const int nbrs[4][2] = {{px - 1, py}, {px + 1, py}, {px, py - 1}, {px, py + 1}};
        for (const auto& q : nbrs) {
          if (q[0] < 0 || q[1] < 0 || q[0] >= width || q[1] >= height) continue;
          const int qc = comp[q[1] * width + q[0]];
          if (qc != f && is_main[qc] && !touched[qc]) ++border[qc];
        }
      }
      if (border.empty()) continue;
      int best = -1, best_count = -1;
      for (const auto& [c, count] : border) {
        if (count > best_count || (count == best_count && labels[components[c].front()] < labels[components[best].front()])) {
          best = c;
          best_count = count;
        }
      }
      const int new_label = labels[components[best].front()];
      for (int p : components[f]) labels[p] = new_label;
      // Component indices of `best` are stale for the rest of this round.
      touched[best] = true;
      progressed = true;
    }
    if (!progressed) throw Error(ErrorCode::DegenerateImage, "connectivity enforcement stalled");
  }
}

}  // namespace

SuperpixelMap slic_segment(const LabImage& img, const SlicParams& params) {
  const int w = img.width;
  const int h = img.height;
  const long area = static_cast<long>(w) * h;
  if (params.target_count < 2 || params.compactness <= 0.0 || params.iterations < 1) {
    throw Error(ErrorCode::InvalidParams, "slic needs target_count >= 2, compactness > 0, iterations >= 1");
  }
  if (params.target_count > area / 16) {
    throw Error(ErrorCode::TargetCountTooLarge,
                std::to_string(params.target_count) + " superpixels requested for " + std::to_string(area) + " pixels");
  }
  const double step = std::sqrt(static_cast<double>(area) / params.target_count);
  if (w < step || h < step) throw Error(ErrorCode::DegenerateImage, "image side shorter than the grid step");

  const auto [nx, ny] = choose_grid(w, h, params.target_count);
  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int cx = std::clamp(static_cast<int>((i + 0.5) * w / nx), 0, w - 1);
      int cy = std::clamp(static_cast<int>((j + 0.5) * h / ny), 0, h - 1);
      int bx = cx, by = cy;
      double best = gradient_energy(img, cx, cy);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = cx + dx, y = cy + dy;
          if (x < 0 || y < 0 || x >= w || y >= h) continue;
          const double g = gradient_energy(img, x, y);
          if (g < best) {
            best = g;
            bx = x;
            by = y;
          }
        }
      }
      centers.push_back({img.at(bx, by), static_cast<double>(bx), static_cast<double>(by)});
    }
  }

  const double spatial_weight = (params.compactness / step) * (params.compactness / step);
  const int radius = static_cast<int>(std::ceil(step));
  std::vector<int> labels(area, -1);
  std::vector<double> dist(area);
  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(labels.begin(), labels.end(), -1);
    for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(c.x) - radius), x1 = std::min(w - 1, static_cast<int>(c.x) + radius);
      const int y0 = std::max(0, static_cast<int>(c.y) - radius), y1 = std::min(h - 1, static_cast<int>(c.y) + radius);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const double dlab = (img.pixels.row(static_cast<Eigen::Index>(i)).transpose() - c.lab).squaredNorm();
          const double dxy = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
          const double d = dlab + spatial_weight * dxy;
          if (d < dist[i]) {
            dist[i] = d;
            labels[i] = k;
          }
        }
      }
    }
    // Pixels that fell outside every window go to the globally nearest center.
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= 0) continue;
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
        const Center& c = centers[k];
        const double d = (img.pixels.row(static_cast<Eigen::Index>(i)).transpose() - c.lab).squaredNorm() +
                         spatial_weight * ((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y));
        if (d < dist[i]) {
          dist[i] = d;
          labels[i] = k;
        }
      }
    }
    std::vector<Center> sums(centers.size(), Center{Eigen::Vector3d::Zero(), 0.0, 0.0});
    std::vector<long> counts(centers.size(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int k = labels[i];
      sums[k].lab += img.pixels.row(static_cast<Eigen::Index>(i)).transpose();
      sums[k].x += static_cast<double>(i % w);
      sums[k].y += static_cast<double>(i / w);
      ++counts[k];
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double n = static_cast<double>(counts[k]);
      centers[k] = {sums[k].lab / n, sums[k].x / n, sums[k].y / n};
    }
  }

  enforce_connectivity(labels, w, h);

  // Compact relabel in raster order of first appearance.
  std::map<int, int> remap;
  for (int& l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  SuperpixelMap sp{w, h, static_cast<int>(remap.size()), std::move(labels)};
  if (sp.count < 2) throw Error(ErrorCode::DegenerateImage, "segmentation collapsed to a single superpixel");
  return sp;
}

RegionTree build_region_tree(const SuperpixelMap& sp, const LabImage& img) {
  const int s = sp.count;
  RegionTree tree;
  tree.leaf_count = s;
  tree.nodes.resize(static_cast<std::size_t>(2 * s - 1));

  std::vector<Eigen::Vector3d> lab_sum(s, Eigen::Vector3d::Zero());
  std::vector<Eigen::Vector2d> xy_sum(s, Eigen::Vector2d::Zero());
  std::vector<long> count(s, 0);
  std::vector<std::set<int>> adjacency(2 * s - 1);
  for (int y = 0; y < sp.height; ++y) {
    for (int x = 0; x < sp.width; ++x) {
      const int l = sp.label(x, y);
      lab_sum[l] += img.at(x, y);
      xy_sum[l] += Eigen::Vector2d(x, y);
      ++count[l];
      if (x + 1 < sp.width && sp.label(x + 1, y) != l) {
        adjacency[l].insert(sp.label(x + 1, y));
        adjacency[sp.label(x + 1, y)].insert(l);
      }
      if (y + 1 < sp.height && sp.label(x, y + 1) != l) {
        adjacency[l].insert(sp.label(x, y + 1));
        adjacency[sp.label(x, y + 1)].insert(l);
      }
    }
  }
  for (int l = 0; l < s; ++l) {
    Region& r = tree.nodes[l];
    r.id = l;
    r.members = {l};
    r.pixel_count = count[l];
    r.mean_lab = lab_sum[l] / static_cast<double>(count[l]);
    r.centroid = xy_sum[l] / static_cast<double>(count[l]);
  }

  std::set<int> active;
  for (int l = 0; l < s; ++l) active.insert(l);
  for (int step = 0; step < s - 1; ++step) {
    int best_a = -1, best_b = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int a : active) {
      for (int b : adjacency[a]) {
        if (b <= a) continue;
        const double d = (tree.nodes[a].mean_lab - tree.nodes[b].mean_lab).norm();
        if (d < best_d) {  // (a, b) iterate in lexicographic order
          best_d = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a < 0) throw Error(ErrorCode::DegenerateImage, "region adjacency graph is disconnected");

    const int id = s + step;
    Region& parent = tree.nodes[id];
    const Region& ra = tree.nodes[best_a];
    const Region& rb = tree.nodes[best_b];
    parent.id = id;
    parent.children = std::make_pair(best_a, best_b);
    std::merge(ra.members.begin(), ra.members.end(), rb.members.begin(), rb.members.end(),
               std::back_inserter(parent.members));
    parent.pixel_count = ra.pixel_count + rb.pixel_count;
    const double na = static_cast<double>(ra.pixel_count), nb = static_cast<double>(rb.pixel_count);
    parent.mean_lab = (ra.mean_lab * na + rb.mean_lab * nb) / (na + nb);
    parent.centroid = (ra.centroid * na + rb.centroid * nb) / (na + nb);
    tree.merges.push_back({best_a, best_b, id, best_d});

    std::set<int> merged_adj;
    for (int a : {best_a, best_b}) {
      for (int n : adjacency[a]) {
        if (n == best_a || n == best_b) continue;
        merged_adj.insert(n);
        adjacency[n].erase(a);
        adjacency[n].insert(id);
      }
      adjacency[a].clear();
      active.erase(a);
    }
    adjacency[id] = std::move(merged_adj);
    active.insert(id);
  }
  return tree;
}

}  // namespace vpr
