#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "lidet/voxel.hpp"

using namespace lidet;

namespace {

GridConfig small_grid() {
  GridConfig cfg;
  cfg.range_min = {0.0, 0.0, 0.0};
  cfg.range_max = {1.0, 1.0, 1.5};
  cfg.voxel_size = {0.1, 0.1, 0.15};
  cfg.max_points_per_voxel = 5;
  cfg.max_voxels = 0;
  return cfg;
}

}  // namespace

TEST(GridDims, PaperConfigs) {
  GridConfig lite;  // defaults are the lite configuration
  EXPECT_EQ(grid_dims(lite), (std::array<int, 3>{1504, 1504, 40}));

  GridConfig nus;
  nus.range_min = {-54.0, -54.0, -5.0};
  nus.range_max = {54.0, 54.0, 3.0};
  nus.voxel_size = {0.075, 0.075, 0.2};
  nus.max_points_per_voxel = 10;
  EXPECT_EQ(grid_dims(nus)[0], 1440);
  EXPECT_EQ(grid_dims(nus)[2], 40);
}

TEST(GridDims, RejectsNonIntegralRatio) {
  GridConfig cfg = small_grid();
  cfg.range_max[0] = 1.03;
  EXPECT_THROW(grid_dims(cfg), std::invalid_argument);
}

TEST(PseudoImageShape, LiteAtStride8) {
  GridConfig lite;
  EXPECT_EQ(pseudo_image_shape(lite, 8), (std::array<int, 3>{188, 188, 5}));
}

TEST(PseudoImageShape, StrideOneIsIdentity) {
  GridConfig cfg = small_grid();
  EXPECT_EQ(pseudo_image_shape(cfg, 1), grid_dims(cfg));
}

TEST(PseudoImageShape, SmallDivisibleCase) {
  GridConfig cfg;
  cfg.range_min = {0.0, 0.0, 0.0};
  cfg.range_max = {1.6, 1.6, 0.8};
  cfg.voxel_size = {0.1, 0.1, 0.1};
  EXPECT_EQ(pseudo_image_shape(cfg, 8), (std::array<int, 3>{2, 2, 1}));
}

TEST(PseudoImageShape, RejectsNonDivisible) {
  GridConfig cfg = small_grid();  // dims 10 x 10 x 10
  EXPECT_THROW(pseudo_image_shape(cfg, 8), std::invalid_argument);
}

TEST(WorldGrid, RangeMinMapsToOrigin) {
  const GridConfig cfg = small_grid();
  const auto g = world_to_grid({0.0, 0.0, 0.0}, cfg);
  EXPECT_DOUBLE_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
  EXPECT_DOUBLE_EQ(g[2], 0.0);
}

TEST(WorldGrid, VoxelCenterRoundTrip) {
  const GridConfig cfg = small_grid();
  const auto w = grid_to_world({0.5, 0.5, 0.5}, cfg);
  EXPECT_NEAR(w[0], 0.05, 1e-12);
  EXPECT_NEAR(w[1], 0.05, 1e-12);
  EXPECT_NEAR(w[2], 0.075, 1e-12);
}

TEST(WorldGrid, RoundTripFuzz) {
  GridConfig lite;
  std::mt19937_64 eng(5);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 10000; ++i) {
    const std::array<double, 3> p{lite.range_min[0] + unit() * 150.4,
                                  lite.range_min[1] + unit() * 150.4,
                                  lite.range_min[2] + unit() * 6.0};
    const auto q = grid_to_world(world_to_grid(p, lite), lite);
    EXPECT_NEAR(q[0], p[0], 1e-9);
    EXPECT_NEAR(q[1], p[1], 1e-9);
    EXPECT_NEAR(q[2], p[2], 1e-9);
  }
}

TEST(Voxelize, MeanOfTwoPointsInOneVoxel) {
  const GridConfig cfg = small_grid();
  PointCloud cloud;
  cloud.points = {{0.01, 0.01, 0.01, 0.5}, {0.03, 0.03, 0.03, 1.0}};
  const VoxelSet vs = voxelize(cloud, cfg);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs.coords[0], (std::array<int, 3>{0, 0, 0}));
  EXPECT_NEAR(vs.features[0][0], 0.02, 1e-12);
  EXPECT_NEAR(vs.features[0][1], 0.02, 1e-12);
  EXPECT_NEAR(vs.features[0][2], 0.02, 1e-12);
  EXPECT_NEAR(vs.features[0][3], 0.75, 1e-12);
  EXPECT_EQ(vs.counts[0], 2);
}

// Half-open upper bound: a point exactly at range_max is discarded.
TEST(Voxelize, UpperBoundaryDiscarded) {
  const GridConfig cfg = small_grid();
  PointCloud cloud;
  cloud.points = {{1.0, 0.5, 0.5, 0.0}};
  EXPECT_EQ(voxelize(cloud, cfg).size(), 0u);
  cloud.points = {{0.0, 0.0, 0.0, 0.0}};  // lower bound is closed
  EXPECT_EQ(voxelize(cloud, cfg).size(), 1u);
}

// Seven points into one voxel with cap 5: mean over the first five in order.
TEST(Voxelize, PointCapKeepsInputOrder) {
  const GridConfig cfg = small_grid();
  PointCloud cloud;
  for (int i = 0; i < 7; ++i) {
    cloud.points.push_back({0.01 * (i + 1), 0.05, 0.05, static_cast<double>(i)});
  }
  const VoxelSet vs = voxelize(cloud, cfg);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs.counts[0], 5);
  const double mean_x = (0.01 + 0.02 + 0.03 + 0.04 + 0.05) / 5.0;
  EXPECT_NEAR(vs.features[0][0], mean_x, 1e-12);
  EXPECT_NEAR(vs.features[0][3], (0 + 1 + 2 + 3 + 4) / 5.0, 1e-12);
}

TEST(Voxelize, VoxelCapDropsNewVoxelsInInputOrder) {
  GridConfig cfg = small_grid();
  cfg.max_voxels = 2;
  PointCloud cloud;
  cloud.points = {{0.05, 0.05, 0.05, 0.0},
                  {0.15, 0.05, 0.05, 0.0},
                  {0.25, 0.05, 0.05, 0.0},   // third voxel: dropped
                  {0.05, 0.05, 0.05, 0.0}};  // existing voxel: kept
  const VoxelSet vs = voxelize(cloud, cfg);
  ASSERT_EQ(vs.size(), 2u);
  EXPECT_EQ(vs.coords[0], (std::array<int, 3>{0, 0, 0}));
  EXPECT_EQ(vs.coords[1], (std::array<int, 3>{1, 0, 0}));
  EXPECT_EQ(vs.counts[0], 2);
}

TEST(Voxelize, PartitionProperty) {
  const GridConfig cfg = small_grid();
  std::mt19937_64 eng(9);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  PointCloud cloud;
  int in_range = 0;
  for (int i = 0; i < 5000; ++i) {
    const double x = unit() * 1.4 - 0.2;
    const double y = unit() * 1.4 - 0.2;
    const double z = unit() * 2.0 - 0.25;
    cloud.points.push_back({x, y, z, unit()});
    if (x >= 0 && x < 1 && y >= 0 && y < 1 && z >= 0 && z < 1.5) ++in_range;
  }
  GridConfig uncapped = cfg;
  uncapped.max_points_per_voxel = 1 << 20;
  const VoxelSet vs = voxelize(cloud, uncapped);
  int total = 0;
  for (int c : vs.counts) total += c;
  EXPECT_EQ(total, in_range);
}

// With non-binding caps the voxel set and the means are order-independent.
TEST(Voxelize, PermutationInvarianceWithoutCaps) {
  GridConfig cfg = small_grid();
  cfg.max_points_per_voxel = 1 << 20;
  cfg.max_voxels = 0;
  std::mt19937_64 eng(13);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  PointCloud cloud;
  for (int i = 0; i < 2000; ++i) {
    cloud.points.push_back({unit(), unit(), unit() * 1.5, unit()});
  }
  PointCloud shuffled = cloud;
  std::shuffle(shuffled.points.begin(), shuffled.points.end(), eng);

  auto canonical = [](const VoxelSet& vs) {
    std::map<std::array<int, 3>, std::pair<int, std::array<double, 4>>> m;
    for (size_t i = 0; i < vs.size(); ++i) m[vs.coords[i]] = {vs.counts[i], vs.features[i]};
    return m;
  };
  const auto a = canonical(voxelize(cloud, cfg));
  const auto b = canonical(voxelize(shuffled, cfg));
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [coord, val] : a) {
    const auto it = b.find(coord);
    ASSERT_NE(it, b.end());
    EXPECT_EQ(val.first, it->second.first);
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(val.second[c], it->second.second[c], 1e-12);
  }
}

TEST(Voxelize, NonFinitePointsAreDiscarded) {
  const GridConfig cfg = small_grid();
  PointCloud cloud;
  cloud.points = {{std::numeric_limits<double>::quiet_NaN(), 0.5, 0.5, 0.0}, {0.5, 0.5, 0.5, 0.0}};
  EXPECT_EQ(voxelize(cloud, cfg).size(), 1u);
}

TEST(GridConfig, ValidationErrors) {
  GridConfig cfg = small_grid();
  cfg.voxel_size[1] = -0.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_grid();
  cfg.range_max[2] = cfg.range_min[2];
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
