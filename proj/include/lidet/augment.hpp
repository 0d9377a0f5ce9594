#pragma once
// Training-time scene augmentation: ground-truth sampling from a database,
// global flip/rotate/scale/translate, and per-instance rotation/location
// noise. All randomness flows through the caller's Rng.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "lidet/frame.hpp"
#include "lidet/geometry.hpp"
#include "lidet/rng.hpp"

namespace lidet {

struct AugmentConfig {
  std::vector<int> samples_per_class{15, 10, 10};
  double flip_prob = 0.5;
  std::array<double, 2> rotation_range{-kPi / 4.0, kPi / 4.0};
  std::array<double, 2> scale_range{0.95, 1.05};
  std::array<double, 2> translation_range{-0.2, 0.2};
  std::array<double, 2> instance_rotation_range{-kPi / 20.0, kPi / 20.0};
  double instance_location_sigma = 0.1;
  // "Flip along the x-axis" mirrors across the x-axis (negates y). The
  // opposite convention swaps which coordinate each flip negates.
  bool flip_along_x_negates_x = false;

  void validate() const {
    auto ordered = [](const std::array<double, 2>& r) { return r[0] <= r[1]; };
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0))
      throw std::invalid_argument("AugmentConfig: flip_prob outside [0,1]");
    if (!ordered(rotation_range) || !ordered(scale_range) || !ordered(translation_range) ||
        !ordered(instance_rotation_range))
      throw std::invalid_argument("AugmentConfig: range not well-ordered");
    if (!(scale_range[0] > 0.0)) throw std::invalid_argument("AugmentConfig: scale must be positive");
    if (instance_location_sigma < 0.0)
      throw std::invalid_argument("AugmentConfig: negative noise sigma");
    for (int n : samples_per_class)
      if (n < 0) throw std::invalid_argument("AugmentConfig: negative sample count");
  }
};

// Stored ground-truth objects with their points in box-local coordinates
// (x along heading, origin at the box center).
struct GtDatabase {
  struct Entry {
    Box3D box;
    std::vector<CloudPoint> local_points;
  };
  std::vector<std::vector<Entry>> per_class;

  size_t total_entries() const {
    size_t n = 0;
    for (const auto& c : per_class) n += c.size();
    return n;
  }
};

inline CloudPoint world_to_box_local(const CloudPoint& p, const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = p.x - box.cx;
  const double dy = p.y - box.cy;
  return {dx * c + dy * s, -dx * s + dy * c, p.z - box.cz, p.intensity};
}

inline CloudPoint box_local_to_world(const CloudPoint& p, const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  return {box.cx + p.x * c - p.y * s, box.cy + p.x * s + p.y * c, box.cz + p.z, p.intensity};
}

// Pair every ground-truth box with the points inside it (closed rotated-3D
// containment), stored box-local. Boxes with no points get empty point sets.
inline GtDatabase build_gt_database(const std::vector<Frame>& frames, int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("build_gt_database: num_classes must be >= 1");
  GtDatabase db;
  db.per_class.resize(num_classes);
  for (const Frame& f : frames) {
    for (const GroundTruth& gt : f.labels) {
      const Box3D& box = gt.box;
      if (box.class_id < 0 || box.class_id >= num_classes)
        throw std::invalid_argument("build_gt_database: class_id outside [0, K)");
      GtDatabase::Entry entry;
      entry.box = box;
      for (const CloudPoint& p : f.cloud.points) {
        if (point_in_box(p.x, p.y, p.z, box)) {
          entry.local_points.push_back(world_to_box_local(p, box));
        }
      }
      db.per_class[box.class_id].push_back(std::move(entry));
    }
  }
  return db;
}

// Paste up to samples_per_class database objects into the scene at their
// stored poses. Candidates are drawn uniformly without replacement; any BEV
// overlap with an existing or already-pasted box rejects the candidate.
inline void sample_gt(const GtDatabase& db, Frame& scene, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  for (size_t cls = 0; cls < db.per_class.size(); ++cls) {
    const auto& pool = db.per_class[cls];
    const int want = cls < cfg.samples_per_class.size() ? cfg.samples_per_class[cls] : 0;
    if (pool.empty() || want == 0) continue;
    std::vector<size_t> order(pool.size());
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
    int accepted = 0;
    for (size_t idx : order) {
      if (accepted >= want) break;
      const GtDatabase::Entry& entry = pool[idx];
      bool collides = false;
      for (const GroundTruth& gt : scene.labels) {
        if (rotated_bev_iou(entry.box, gt.box) > 0.0) {
          collides = true;
          break;
        }
      }
      if (collides) continue;
      GroundTruth gt;
      gt.box = entry.box;
      gt.num_points = static_cast<int>(entry.local_points.size());
      for (const CloudPoint& lp : entry.local_points) {
        scene.cloud.points.push_back(box_local_to_world(lp, entry.box));
      }
      scene.labels.push_back(gt);
      ++accepted;
    }
  }
}

namespace detail {

inline void flip_scene(Frame& scene, bool along_x, bool negate_x) {
  // along_x: mirror across the x-axis (negate y, yaw -> -yaw);
  // otherwise: mirror across the y-axis (negate x, yaw -> pi - yaw).
  const bool neg_y = along_x != negate_x;
  for (CloudPoint& p : scene.cloud.points) {
    if (neg_y) p.y = -p.y;
    else p.x = -p.x;
  }
  for (GroundTruth& gt : scene.labels) {
    Box3D& b = gt.box;
    if (neg_y) {
      b.cy = -b.cy;
      b.yaw = normalize_yaw(-b.yaw);
    } else {
      b.cx = -b.cx;
      b.yaw = normalize_yaw(kPi - b.yaw);
    }
  }
}

}  // namespace detail

// Global augmentation in the order flip -> rotate -> scale -> translate.
// Random draws per scene, in order: flip-x uniform, flip-y uniform, rotation,
// scale, translation x/y/z.
inline void global_augment(Frame& scene, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  const bool do_flip_x = rng.uniform() < cfg.flip_prob;
  const bool do_flip_y = rng.uniform() < cfg.flip_prob;
  const double rot = rng.uniform(cfg.rotation_range[0], cfg.rotation_range[1]);
  const double scale = rng.uniform(cfg.scale_range[0], cfg.scale_range[1]);
  const double tx = rng.uniform(cfg.translation_range[0], cfg.translation_range[1]);
  const double ty = rng.uniform(cfg.translation_range[0], cfg.translation_range[1]);
  const double tz = rng.uniform(cfg.translation_range[0], cfg.translation_range[1]);

  if (do_flip_x) detail::flip_scene(scene, true, cfg.flip_along_x_negates_x);
  if (do_flip_y) detail::flip_scene(scene, false, cfg.flip_along_x_negates_x);

  const double c = std::cos(rot);
  const double s = std::sin(rot);
  for (CloudPoint& p : scene.cloud.points) {
    const double x = p.x * c - p.y * s;
    const double y = p.x * s + p.y * c;
    p.x = x * scale + tx;
    p.y = y * scale + ty;
    p.z = p.z * scale + tz;
  }
  for (GroundTruth& gt : scene.labels) {
    Box3D& b = gt.box;
    const double x = b.cx * c - b.cy * s;
    const double y = b.cx * s + b.cy * c;
    b.cx = x * scale + tx;
    b.cy = y * scale + ty;
    b.cz = b.cz * scale + tz;
    b.l *= scale;
    b.w *= scale;
    b.h *= scale;
    b.yaw = normalize_yaw(b.yaw + rot);
  }
}

// Per-instance noise: rotate each box's points about its center by a uniform
// angle and translate box plus points by per-axis Gaussian noise. Ownership
// is resolved before any motion, first box wins on overlap; background
// points are untouched. Draws per box, in order: rotation, noise x/y/z.
inline void instance_augment(Frame& scene, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  const size_t num_points = scene.cloud.points.size();
  std::vector<int> owner(num_points, -1);
  for (size_t pi = 0; pi < num_points; ++pi) {
    const CloudPoint& p = scene.cloud.points[pi];
    for (size_t bi = 0; bi < scene.labels.size(); ++bi) {
      if (point_in_box(p.x, p.y, p.z, scene.labels[bi].box)) {
        owner[pi] = static_cast<int>(bi);
        break;
      }
    }
  }
  for (size_t bi = 0; bi < scene.labels.size(); ++bi) {
    const double dtheta =
        rng.uniform(cfg.instance_rotation_range[0], cfg.instance_rotation_range[1]);
    const double dx = rng.normal(0.0, cfg.instance_location_sigma);
    const double dy = rng.normal(0.0, cfg.instance_location_sigma);
    const double dz = rng.normal(0.0, cfg.instance_location_sigma);
    Box3D& b = scene.labels[bi].box;
    const double c = std::cos(dtheta);
    const double s = std::sin(dtheta);
    for (size_t pi = 0; pi < num_points; ++pi) {
      if (owner[pi] != static_cast<int>(bi)) continue;
      CloudPoint& p = scene.cloud.points[pi];
      const double rx = p.x - b.cx;
      const double ry = p.y - b.cy;
      p.x = b.cx + rx * c - ry * s + dx;
      p.y = b.cy + rx * s + ry * c + dy;
      p.z += dz;
    }
    b.cx += dx;
    b.cy += dy;
    b.cz += dz;
    b.yaw = normalize_yaw(b.yaw + dtheta);
  }
}

}  // namespace lidet
