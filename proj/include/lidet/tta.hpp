#pragma once
// Test-time augmentation transforms (yaw rotation, global scaling, z
// translation) with exact inverses, and greedy score-weighted fusion of
// detections from multiple passes or models.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lidet/decode.hpp"
#include "lidet/frame.hpp"
#include "lidet/geometry.hpp"

namespace lidet {

// p' = R(yaw_rot) * (p * scale) + (0, 0, z_shift)
struct TtaTransform {
  double yaw_rot = 0.0;
  double scale = 1.0;
  double z_shift = 0.0;

  TtaTransform inverse() const {
    if (!(scale > 0.0)) throw std::invalid_argument("TtaTransform: scale must be positive");
    // R(-y)((p' - z e3)/s) = R(-y) p'/s - z/s e3 since R is about the z axis.
    return {-yaw_rot, 1.0 / scale, -z_shift / scale};
  }
};

// The paper's ensembling grid: 10 yaw rotations x 3 scales x 3 z shifts.
struct TtaGrid {
  std::vector<double> yaw_deg{0.0, 22.5, -22.5, 45.0, -45.0, 135.0, -135.0, 157.5, -157.5, 180.0};
  std::vector<double> scales{0.95, 1.0, 1.05};
  std::vector<double> z_shifts{-0.2, 0.0, 0.2};

  std::vector<TtaTransform> expand() const {
    std::vector<TtaTransform> out;
    out.reserve(yaw_deg.size() * scales.size() * z_shifts.size());
    for (double deg : yaw_deg) {
      for (double s : scales) {
        for (double z : z_shifts) {
          out.push_back({deg * kPi / 180.0, s, z});
        }
      }
    }
    return out;
  }
};

inline CloudPoint transform_point(const CloudPoint& p, const TtaTransform& t) {
  const double c = std::cos(t.yaw_rot);
  const double s = std::sin(t.yaw_rot);
  const double x = p.x * t.scale;
  const double y = p.y * t.scale;
  const double z = p.z * t.scale;
  return {x * c - y * s, x * s + y * c, z + t.z_shift, p.intensity};
}

inline PointCloud transform_points(const PointCloud& cloud, const TtaTransform& t) {
  PointCloud out;
  out.has_intensity = cloud.has_intensity;
  out.points.reserve(cloud.points.size());
  for (const CloudPoint& p : cloud.points) out.points.push_back(transform_point(p, t));
  return out;
}

// Forward transform of a box into the TTA frame.
inline Box3D transform_box(const Box3D& b, const TtaTransform& t) {
  Box3D out = b;
  const CloudPoint c = transform_point({b.cx, b.cy, b.cz, 0.0}, t);
  out.cx = c.x;
  out.cy = c.y;
  out.cz = c.z;
  out.l = b.l * t.scale;
  out.w = b.w * t.scale;
  out.h = b.h * t.scale;
  out.yaw = normalize_yaw(b.yaw + t.yaw_rot);
  return out;
}

// Map detections made in the TTA frame back into the original frame;
// scores are untouched.
inline DetectionSet inverse_transform_boxes(DetectionSet dets, const TtaTransform& t) {
  const TtaTransform inv = t.inverse();
  for (Box3D& b : dets.boxes) b = transform_box(b, inv);
  return dets;
}

enum class FuseMode {
  kScoreWeighted,   // box fields averaged with score weights
  kUnweightedMean,  // plain mean of member box fields
};

// Greedy clustering by descending score within class (rotated BEV IoU >=
// fuse_iou joins a cluster), then per-cluster averaging. Yaw is fused by a
// weighted circular mean after flipping members that point more than pi/2
// away from the cluster seed, so front/back-swapped boxes do not corrupt the
// mean. Fused score = mean(member scores) * min(1, members / num_sets).
inline DetectionSet fuse_detections(const std::vector<DetectionSet>& sets, double fuse_iou = 0.55,
                                    FuseMode mode = FuseMode::kScoreWeighted) {
  DetectionSet out;
  if (sets.empty()) return out;
  out.frame_id = sets.front().frame_id;
  const double num_sets = static_cast<double>(sets.size());

  std::vector<Box3D> all;
  for (const DetectionSet& s : sets) {
    if (s.frame_id != out.frame_id)
      throw std::invalid_argument("fuse_detections: sets from different frames");
    all.insert(all.end(), s.boxes.begin(), s.boxes.end());
  }
  std::stable_sort(all.begin(), all.end(), [](const Box3D& a, const Box3D& b) {
    return a.score.value_or(0.0) > b.score.value_or(0.0);
  });

  std::vector<char> used(all.size(), 0);
  for (size_t i = 0; i < all.size(); ++i) {
    if (used[i]) continue;
    const Box3D& seed = all[i];
    std::vector<size_t> members{i};
    used[i] = 1;
    for (size_t j = i + 1; j < all.size(); ++j) {
      if (used[j] || all[j].class_id != seed.class_id) continue;
      if (rotated_bev_iou(seed, all[j]) >= fuse_iou) {
        members.push_back(j);
        used[j] = 1;
      }
    }

    Box3D fused = seed;
    double wsum = 0.0, cx = 0.0, cy = 0.0, cz = 0.0, l = 0.0, w = 0.0, h = 0.0;
    double sin_sum = 0.0, cos_sum = 0.0, score_sum = 0.0, iou_sum = 0.0, iou_wsum = 0.0;
    for (size_t m : members) {
      const Box3D& b = all[m];
      const double score = b.score.value_or(0.0);
      const double weight = mode == FuseMode::kScoreWeighted ? std::max(score, 1e-12) : 1.0;
      double yaw = b.yaw;
      if (yaw_difference(yaw, seed.yaw) > kPi / 2.0) yaw = normalize_yaw(yaw + kPi);
      wsum += weight;
      cx += weight * b.cx;
      cy += weight * b.cy;
      cz += weight * b.cz;
      l += weight * b.l;
      w += weight * b.w;
      h += weight * b.h;
      sin_sum += weight * std::sin(yaw);
      cos_sum += weight * std::cos(yaw);
      score_sum += score;
      if (b.iou_pred) {
        iou_sum += weight * *b.iou_pred;
        iou_wsum += weight;
      }
    }
    fused.cx = cx / wsum;
    fused.cy = cy / wsum;
    fused.cz = cz / wsum;
    fused.l = l / wsum;
    fused.w = w / wsum;
    fused.h = h / wsum;
    fused.yaw = (sin_sum == 0.0 && cos_sum == 0.0) ? seed.yaw
                                                   : normalize_yaw(std::atan2(sin_sum, cos_sum));
    fused.score = (score_sum / static_cast<double>(members.size())) *
                  std::min(1.0, static_cast<double>(members.size()) / num_sets);
    if (iou_wsum > 0.0) fused.iou_pred = iou_sum / iou_wsum;
    out.boxes.push_back(fused);
  }
  out.sort_by_score();
  return out;
}

}  // namespace lidet
