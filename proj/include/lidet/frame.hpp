#pragma once
// Point clouds and labeled frames shared by the voxelizer, augmentation,
// simulator and evaluator.

#include <string>
#include <vector>

#include "lidet/geometry.hpp"

namespace lidet {

struct CloudPoint {
  double x = 0.0, y = 0.0, z = 0.0;
  double intensity = 0.0;
};

struct PointCloud {
  std::vector<CloudPoint> points;
  bool has_intensity = true;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Ground-truth label: box plus the LiDAR point count used for the L1/L2
// difficulty split and an optional explicit LEVEL_2 annotation.
struct GroundTruth {
  Box3D box;
  int num_points = 0;
  bool annotated_l2 = false;
};

struct Frame {
  std::string id;
  PointCloud cloud;
  std::vector<GroundTruth> labels;
};

}  // namespace lidet
