#pragma once
// Detection-range grid configuration, point-cloud voxelization with mean
// features, and feature-extractor shape/stride planning.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lidet/frame.hpp"

namespace lidet {

// Detection range and voxel sizes per axis (x, y, z). The range/voxel ratio
// must be integral within 1e-6 per axis. max_voxels == 0 means unlimited
// (the inference-side default; training-side caps are plain config values).
struct GridConfig {
  std::array<double, 3> range_min{-75.2, -75.2, -2.0};
  std::array<double, 3> range_max{75.2, 75.2, 4.0};
  std::array<double, 3> voxel_size{0.1, 0.1, 0.15};
  int max_points_per_voxel = 5;
  int64_t max_voxels = 0;
  int num_classes = 3;
  int max_objects = 500;

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (!(range_max[a] > range_min[a]))
        throw std::invalid_argument("GridConfig: range_max must exceed range_min");
      if (!(voxel_size[a] > 0.0))
        throw std::invalid_argument("GridConfig: voxel_size must be positive");
      const double ratio = (range_max[a] - range_min[a]) / voxel_size[a];
      if (std::abs(ratio - std::round(ratio)) > 1e-6)
        throw std::invalid_argument("GridConfig: range is not an integral number of voxels on axis " +
                                    std::to_string(a));
    }
    if (max_points_per_voxel < 1)
      throw std::invalid_argument("GridConfig: max_points_per_voxel must be >= 1");
    if (max_voxels < 0) throw std::invalid_argument("GridConfig: max_voxels must be >= 0");
    if (num_classes < 1) throw std::invalid_argument("GridConfig: num_classes must be >= 1");
    if (max_objects < 1) throw std::invalid_argument("GridConfig: max_objects must be >= 1");
  }
};

// Voxel counts per axis: (W, H, D) along (x, y, z).
inline std::array<int, 3> grid_dims(const GridConfig& cfg) {
  cfg.validate();
  std::array<int, 3> dims;
  for (int a = 0; a < 3; ++a) {
    dims[a] = static_cast<int>(std::llround((cfg.range_max[a] - cfg.range_min[a]) / cfg.voxel_size[a]));
  }
  return dims;
}

// Output shape after the 3D feature extractor: the x/y dimensions are divided
// by the stride and the z-slab count (D/stride) is folded into channels.
inline std::array<int, 3> pseudo_image_shape(const GridConfig& cfg, int stride) {
  if (stride < 1) throw std::invalid_argument("pseudo_image_shape: stride must be >= 1");
  const std::array<int, 3> dims = grid_dims(cfg);
  for (int a = 0; a < 3; ++a) {
    if (dims[a] % stride != 0)
      throw std::invalid_argument("pseudo_image_shape: grid dimension " + std::to_string(dims[a]) +
                                  " is not divisible by stride " + std::to_string(stride));
  }
  return {dims[0] / stride, dims[1] / stride, dims[2] / stride};
}

// Continuous world <-> grid coordinate maps; mutual inverses, no range check.
inline std::array<double, 3> world_to_grid(const std::array<double, 3>& p, const GridConfig& cfg) {
  return {(p[0] - cfg.range_min[0]) / cfg.voxel_size[0],
          (p[1] - cfg.range_min[1]) / cfg.voxel_size[1],
          (p[2] - cfg.range_min[2]) / cfg.voxel_size[2]};
}

inline std::array<double, 3> grid_to_world(const std::array<double, 3>& g, const GridConfig& cfg) {
  return {cfg.range_min[0] + g[0] * cfg.voxel_size[0], cfg.range_min[1] + g[1] * cfg.voxel_size[1],
          cfg.range_min[2] + g[2] * cfg.voxel_size[2]};
}

// Sparse voxelization result: unique in-grid coordinates, mean features
// (x, y, z, intensity) over the points kept in each voxel, and point counts.
struct VoxelSet {
  std::vector<std::array<int, 3>> coords;
  std::vector<std::array<double, 4>> features;
  std::vector<int> counts;
  bool has_intensity = true;

  size_t size() const { return coords.size(); }
};

// Assign points to voxels by floor((p - range_min) / voxel_size) with a
// half-open [range_min, range_max) bound per axis. Points beyond
// max_points_per_voxel in a voxel, and voxels beyond max_voxels, are dropped
// in input order. Output voxels appear in first-seen order.
inline VoxelSet voxelize(const PointCloud& cloud, const GridConfig& cfg) {
  cfg.validate();
  const std::array<int, 3> dims = grid_dims(cfg);
  VoxelSet out;
  out.has_intensity = cloud.has_intensity;
  std::unordered_map<int64_t, size_t> index;
  index.reserve(cloud.points.size());
  std::vector<std::array<double, 4>> sums;

  for (const CloudPoint& p : cloud.points) {
    const std::array<double, 3> w{p.x, p.y, p.z};
    bool in_range = true;
    std::array<int, 3> iv{};
    for (int a = 0; a < 3; ++a) {
      if (!(w[a] >= cfg.range_min[a] && w[a] < cfg.range_max[a])) {
        in_range = false;
        break;
      }
      int idx = static_cast<int>(std::floor((w[a] - cfg.range_min[a]) / cfg.voxel_size[a]));
      // Guard against the division rounding up onto the upper grid face.
      if (idx < 0) idx = 0;
      if (idx >= dims[a]) idx = dims[a] - 1;
      iv[a] = idx;
    }
    if (!in_range) continue;

    const int64_t key = (static_cast<int64_t>(iv[2]) * dims[1] + iv[1]) * dims[0] + iv[0];
    auto it = index.find(key);
    if (it == index.end()) {
      if (cfg.max_voxels > 0 && static_cast<int64_t>(out.coords.size()) >= cfg.max_voxels) continue;
      index.emplace(key, out.coords.size());
      out.coords.push_back(iv);
      out.counts.push_back(1);
      sums.push_back({p.x, p.y, p.z, p.intensity});
    } else {
      const size_t v = it->second;
      if (out.counts[v] >= cfg.max_points_per_voxel) continue;
      out.counts[v] += 1;
      sums[v][0] += p.x;
      sums[v][1] += p.y;
      sums[v][2] += p.z;
      sums[v][3] += p.intensity;
    }
  }

  out.features.resize(sums.size());
  for (size_t v = 0; v < sums.size(); ++v) {
    const double n = static_cast<double>(out.counts[v]);
    out.features[v] = {sums[v][0] / n, sums[v][1] / n, sums[v][2] / n,
                       cloud.has_intensity ? sums[v][3] / n : 0.0};
  }
  return out;
}

}  // namespace lidet
