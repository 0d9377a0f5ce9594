#pragma once
// Ground-truth boxes -> the per-pixel target maps of the anchor-free head:
// per-class center heatmap, corner/center keypoint heatmap, and per-object
// offset / z / size / orientation / IoU regression targets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "lidet/geometry.hpp"
#include "lidet/voxel.hpp"

namespace lidet {

// Full target set for one frame. Dense maps are row-major [class][row][col]
// with row = y pixel, col = x pixel. Per-object arrays are parallel and hold
// N <= max_objects entries; indices are flattened row * width + col.
struct TargetMaps {
  int num_classes = 0;
  int height = 0;
  int width = 0;
  std::vector<double> heatmap;       // [K][H][W], in [0, 1]
  std::vector<double> keypoint_map;  // [K][H][W], in [0, 1]
  std::vector<int64_t> indices;
  std::vector<int> class_ids;
  std::vector<std::array<double, 2>> offset;       // sub-pixel (dx, dy), output-pixel units
  std::vector<double> z;                           // meters
  std::vector<std::array<double, 3>> size;         // (l, w, h) meters
  std::vector<std::array<double, 2>> orientation;  // (sin yaw, cos yaw)
  std::vector<double> iou_target;                  // in [-1, 1]
  std::vector<uint8_t> mask;

  int count() const { return static_cast<int>(indices.size()); }
};

// IoU regression target: clamp(2*iou - 0.5, -1, 1). The raw affine map has
// range [-0.5, 1.5]; the clamp pins it to the advertised [-1, 1] interval.
inline double iou_target_transform(double iou) {
  return std::clamp(2.0 * iou - 0.5, -1.0, 1.0);
}

// Inverse of iou_target_transform back onto [0, 1]. Values of iou >= 0.75
// saturate the forward clamp, so the inverse maps target 1 to 0.75.
inline double iou_target_inverse(double target) {
  return std::clamp((target + 0.5) / 2.0, 0.0, 1.0);
}

// Minimum Gaussian radius so that any box within `min_overlap` IoU of the
// ground truth keeps its corners inside the splat; the three quadratic cases
// cover the box growing, shrinking, or shifting. Follows the corner-keypoint
// convention, floored at 2 output-pixels.
inline double gaussian_radius(double l_pix, double w_pix, double min_overlap = 0.7,
                              double min_radius = 2.0) {
  if (!(l_pix > 0.0 && w_pix > 0.0))
    throw std::invalid_argument("gaussian_radius: non-positive box extent");
  const double h = l_pix, w = w_pix;

  const double b1 = h + w;
  const double c1 = w * h * (1.0 - min_overlap) / (1.0 + min_overlap);
  const double r1 = (b1 + std::sqrt(b1 * b1 - 4.0 * c1)) / 2.0;

  const double b2 = 2.0 * (h + w);
  const double c2 = (1.0 - min_overlap) * w * h;
  const double r2 = (b2 + std::sqrt(b2 * b2 - 16.0 * c2)) / 2.0;

  const double b3 = -2.0 * min_overlap * (h + w);
  const double c3 = (min_overlap - 1.0) * w * h;
  const double r3 = (b3 + std::sqrt(b3 * b3 - 16.0 * min_overlap * c3)) / 2.0;

  return std::max(min_radius, std::min({r1, r2, r3}));
}

// Splat exp(-(dx^2+dy^2) / (2 sigma^2)) with sigma = radius / 3 into a
// (2*radius+1)^2 window around (col, row) of the given class channel,
// max-combined with existing values; the window is clipped at the borders.
// The center pixel becomes exactly 1.
inline void draw_gaussian(std::span<double> map, int height, int width, int row, int col,
                          int radius, int channel) {
  if (radius < 1) throw std::invalid_argument("draw_gaussian: radius must be >= 1");
  if (row < 0 || row >= height || col < 0 || col >= width)
    throw std::invalid_argument("draw_gaussian: center outside map");
  const double sigma = radius / 3.0;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double* base = map.data() + static_cast<size_t>(channel) * height * width;
  for (int dy = -radius; dy <= radius; ++dy) {
    const int r = row + dy;
    if (r < 0 || r >= height) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int c = col + dx;
      if (c < 0 || c >= width) continue;
      const double v = std::exp(-(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) * inv);
      double& cell = base[static_cast<size_t>(r) * width + c];
      cell = std::max(cell, v);
    }
  }
}

// Encode ground-truth boxes into TargetMaps at the given output stride.
// Objects whose center pixel falls outside the output map are skipped; if
// more than cfg.max_objects remain, the largest-BEV-area boxes are kept.
// per_object_iou, when provided, supplies the IoU fed to the target
// transform per input box (by input position); otherwise ground truth
// against itself (IoU = 1) is assumed.
inline TargetMaps encode_targets(std::span<const Box3D> boxes, const GridConfig& cfg, int stride,
                                 std::span<const double> per_object_iou = {}) {
  cfg.validate();
  const std::array<int, 3> shape = pseudo_image_shape(cfg, stride);
  const int width = shape[0];
  const int height = shape[1];
  const int num_classes = cfg.num_classes;
  if (!per_object_iou.empty() && per_object_iou.size() != boxes.size())
    throw std::invalid_argument("encode_targets: per_object_iou size mismatch");

  struct Placed {
    size_t input_idx;
    int col, row;
    double fx, fy;  // sub-pixel remainder
  };
  std::vector<Placed> placed;
  placed.reserve(boxes.size());
  for (size_t i = 0; i < boxes.size(); ++i) {
    const Box3D& b = boxes[i];
    if (!b.valid()) throw std::invalid_argument("encode_targets: invalid box");
    if (b.class_id < 0 || b.class_id >= num_classes)
      throw std::invalid_argument("encode_targets: class_id outside [0, K)");
    const std::array<double, 3> g = world_to_grid({b.cx, b.cy, b.cz}, cfg);
    const double ox = g[0] / stride;
    const double oy = g[1] / stride;
    const int col = static_cast<int>(std::floor(ox));
    const int row = static_cast<int>(std::floor(oy));
    if (col < 0 || col >= width || row < 0 || row >= height) continue;
    placed.push_back({i, col, row, ox - col, oy - row});
  }

  if (static_cast<int>(placed.size()) > cfg.max_objects) {
    std::stable_sort(placed.begin(), placed.end(), [&](const Placed& a, const Placed& b) {
      return boxes[a.input_idx].bev_area() > boxes[b.input_idx].bev_area();
    });
    placed.resize(cfg.max_objects);
    std::stable_sort(placed.begin(), placed.end(),
                     [](const Placed& a, const Placed& b) { return a.input_idx < b.input_idx; });
  }

  TargetMaps maps;
  maps.num_classes = num_classes;
  maps.height = height;
  maps.width = width;
  maps.heatmap.assign(static_cast<size_t>(num_classes) * height * width, 0.0);
  maps.keypoint_map.assign(static_cast<size_t>(num_classes) * height * width, 0.0);

  for (const Placed& pl : placed) {
    const Box3D& b = boxes[pl.input_idx];
    const double l_pix = b.l / (cfg.voxel_size[0] * stride);
    const double w_pix = b.w / (cfg.voxel_size[1] * stride);
    const int radius = static_cast<int>(std::floor(gaussian_radius(l_pix, w_pix)));
    draw_gaussian(maps.heatmap, height, width, pl.row, pl.col, radius, b.class_id);

    // Keypoint auxiliary targets: the 4 BEV corners plus the center, on the
    // same per-class layout but with a halved radius.
    const int kp_radius = std::max(1, static_cast<int>(std::lround(radius / 2.0)));
    std::vector<Point2> keypoints = bev_corners(b).vertices;
    keypoints.push_back({b.cx, b.cy});
    for (const Point2& kp : keypoints) {
      const std::array<double, 3> kg = world_to_grid({kp.x, kp.y, 0.0}, cfg);
      const int kc = static_cast<int>(std::floor(kg[0] / stride));
      const int kr = static_cast<int>(std::floor(kg[1] / stride));
      if (kc < 0 || kc >= width || kr < 0 || kr >= height) continue;
      draw_gaussian(maps.keypoint_map, height, width, kr, kc, kp_radius, b.class_id);
    }

    maps.indices.push_back(static_cast<int64_t>(pl.row) * width + pl.col);
    maps.class_ids.push_back(b.class_id);
    maps.offset.push_back({pl.fx, pl.fy});
    maps.z.push_back(b.cz);
    maps.size.push_back({b.l, b.w, b.h});
    maps.orientation.push_back({std::sin(b.yaw), std::cos(b.yaw)});
    const double iou = per_object_iou.empty() ? 1.0 : per_object_iou[pl.input_idx];
    maps.iou_target.push_back(iou_target_transform(iou));
    maps.mask.push_back(1);
  }
  return maps;
}

}  // namespace lidet
