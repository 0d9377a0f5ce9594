#include <gtest/gtest.h>

#include <random>

#include "lidet/geometry.hpp"
#include "oracles.hpp"

using namespace lidet;

TEST(NormalizeYaw, Identity) { EXPECT_DOUBLE_EQ(normalize_yaw(0.0), 0.0); }

TEST(NormalizeYaw, Periodicity) { EXPECT_NEAR(normalize_yaw(3.0 * kPi), kPi, 1e-12); }

// Half-open interval convention: -pi maps to +pi.
TEST(NormalizeYaw, BoundaryConvention) {
  EXPECT_DOUBLE_EQ(normalize_yaw(-kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_yaw(kPi), kPi);
}

TEST(NormalizeYaw, Idempotent) {
  std::mt19937_64 eng(7);
  for (int i = 0; i < 1000; ++i) {
    const double t = (static_cast<double>(eng() >> 11) * 0x1.0p-53 - 0.5) * 40.0;
    const double n = normalize_yaw(t);
    EXPECT_GT(n, -kPi);
    EXPECT_LE(n, kPi);
    EXPECT_DOUBLE_EQ(normalize_yaw(n), n);
    // equivalent mod 2*pi
    EXPECT_NEAR(std::remainder(n - t, 2.0 * kPi), 0.0, 1e-9);
  }
}

TEST(NormalizeYaw, RejectsNonFinite) {
  EXPECT_THROW(normalize_yaw(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  EXPECT_THROW(normalize_yaw(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(BevCorners, AxisAlignedUnitBox) {
  Box3D b;
  b.l = 1.0;
  b.w = 1.0;
  const Polygon2D poly = bev_corners(b);
  ASSERT_EQ(poly.vertices.size(), 4u);
  EXPECT_NEAR(poly.vertices[0].x, 0.5, 1e-15);
  EXPECT_NEAR(poly.vertices[0].y, 0.5, 1e-15);
  EXPECT_NEAR(poly.vertices[1].x, -0.5, 1e-15);
  EXPECT_NEAR(poly.vertices[1].y, 0.5, 1e-15);
  EXPECT_NEAR(poly.vertices[2].x, -0.5, 1e-15);
  EXPECT_NEAR(poly.vertices[2].y, -0.5, 1e-15);
  EXPECT_NEAR(poly.vertices[3].x, 0.5, 1e-15);
  EXPECT_NEAR(poly.vertices[3].y, -0.5, 1e-15);
}

// A quarter turn maps (x, y) -> (-y, x).
TEST(BevCorners, QuarterTurnSymmetry) {
  Box3D base;
  base.l = 2.0;
  base.w = 1.0;
  Box3D turned = base;
  turned.yaw = kPi / 2.0;
  const Polygon2D p0 = bev_corners(base);
  const Polygon2D p1 = bev_corners(turned);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(p1.vertices[i].x, -p0.vertices[i].y, 1e-12);
    EXPECT_NEAR(p1.vertices[i].y, p0.vertices[i].x, 1e-12);
  }
}

// Frozen values from an explicit rotation-matrix expansion at yaw = 0.3.
TEST(BevCorners, HandRotatedBox) {
  Box3D b;
  b.cx = 1.0;
  b.cy = 2.0;
  b.l = 4.0;
  b.w = 2.0;
  b.yaw = 0.3;
  const Polygon2D poly = bev_corners(b);
  const double expect[4][2] = {{2.61515277158987246, 3.54637690244828517},
                               {-1.20619318491255161, 2.36429607580292687},
                               {-0.61515277158987246, 0.45362309755171483},
                               {3.20619318491255161, 1.63570392419707313}};
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(poly.vertices[i].x, expect[i][0], 1e-9);
    EXPECT_NEAR(poly.vertices[i].y, expect[i][1], 1e-9);
  }
}

TEST(BevCorners, CentroidAndAreaMatchBox) {
  std::mt19937_64 eng(11);
  for (int i = 0; i < 2000; ++i) {
    const Box3D b = oracle::random_box(eng, 20.0);
    const Polygon2D poly = bev_corners(b);
    EXPECT_NEAR(poly.area(), b.l * b.w, 1e-9);
    const Point2 c = poly.centroid();
    EXPECT_NEAR(c.x, b.cx, 1e-9);
    EXPECT_NEAR(c.y, b.cy, 1e-9);
  }
}

TEST(RotatedBevIou, IdenticalBoxesExactlyOne) {
  std::mt19937_64 eng(3);
  for (int i = 0; i < 100; ++i) {
    const Box3D b = oracle::random_box(eng);
    EXPECT_DOUBLE_EQ(rotated_bev_iou(b, b), 1.0);
  }
}

TEST(RotatedBevIou, DisjointBoxesZero) {
  Box3D a, b;
  a.l = a.w = 5.0;
  b = a;
  b.cx = 100.0;
  EXPECT_DOUBLE_EQ(rotated_bev_iou(a, b), 0.0);
}

// Two unit squares about the same center, rotated 45 degrees apart: the
// intersection is a regular octagon and the IoU is exactly sqrt(2)/2.
TEST(RotatedBevIou, OctagonCase) {
  Box3D a, b;
  a.l = a.w = b.l = b.w = 1.0;
  b.yaw = kPi / 4.0;
  EXPECT_NEAR(rotated_bev_iou(a, b), std::sqrt(2.0) / 2.0, 1e-9);
}

TEST(RotatedBevIou, SymmetryFuzz) {
  std::mt19937_64 eng(17);
  for (int i = 0; i < 10000; ++i) {
    const Box3D a = oracle::random_box(eng);
    const Box3D b = oracle::random_box(eng);
    EXPECT_DOUBLE_EQ(rotated_bev_iou(a, b), rotated_bev_iou(b, a));
  }
}

// Invariance under a simultaneous rigid transform of both boxes.
TEST(RotatedBevIou, RigidTransformInvariance) {
  std::mt19937_64 eng(23);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 500; ++i) {
    const Box3D a = oracle::random_box(eng, 2.0);
    const Box3D b = oracle::random_box(eng, 2.0);
    const double base = rotated_bev_iou(a, b);
    const double theta = (unit() - 0.5) * 2.0 * kPi;
    const double tx = (unit() - 0.5) * 100.0;
    const double ty = (unit() - 0.5) * 100.0;
    auto moved = [&](const Box3D& box) {
      Box3D m = box;
      const double c = std::cos(theta), s = std::sin(theta);
      m.cx = box.cx * c - box.cy * s + tx;
      m.cy = box.cx * s + box.cy * c + ty;
      m.yaw = normalize_yaw(box.yaw + theta);
      return m;
    };
    EXPECT_NEAR(rotated_bev_iou(moved(a), moved(b)), base, 1e-9);
  }
}

TEST(RotatedBevIou, MonteCarloSpotCheck) {
  std::mt19937_64 eng(31);
  for (int i = 0; i < 20; ++i) {
    const Box3D a = oracle::random_box(eng, 1.5);
    const Box3D b = oracle::random_box(eng, 1.5);
    const double mc = oracle::mc_bev_iou(a, b, 1000000, 1000 + i);
    EXPECT_NEAR(rotated_bev_iou(a, b), mc, 5e-3);
  }
}

TEST(AlignedIou3d, IdenticalUnitCubes) {
  Box3D a;
  EXPECT_DOUBLE_EQ(aligned_iou3d(a, a), 1.0);
}

// Unit cubes offset by half along x: intersection 0.5, union 1.5.
TEST(AlignedIou3d, HalfOffsetCubes) {
  Box3D a, b;
  b.cx = 0.5;
  EXPECT_NEAR(aligned_iou3d(a, b), 1.0 / 3.0, 1e-12);
}

TEST(AlignedIou3d, DisjointInZOnly) {
  Box3D a, b;
  b.cz = 5.0;
  EXPECT_DOUBLE_EQ(aligned_iou3d(a, b), 0.0);
}

// The AABB-of-rotated-corners mode grows with yaw; the yaw-zero mode does not.
TEST(AlignedIou3d, ModeFlagDiffersForRotatedBoxes) {
  Box3D a;
  a.l = 4.0;
  a.w = 1.0;
  Box3D b = a;
  b.yaw = kPi / 4.0;
  EXPECT_LT(aligned_iou3d(a, b, AlignedIouMode::kRotatedCorners), 1.0);
  EXPECT_DOUBLE_EQ(aligned_iou3d(a, b, AlignedIouMode::kYawZero), 1.0);
}

TEST(RotatedIou3d, IdenticalAnyYawIsOne) {
  std::mt19937_64 eng(41);
  for (int i = 0; i < 100; ++i) {
    const Box3D b = oracle::random_box(eng);
    EXPECT_DOUBLE_EQ(rotated_iou3d(b, b), 1.0);
  }
}

// With zero yaw the rotated kernel must agree with the axis-aligned one.
TEST(RotatedIou3d, ZeroYawReduction) {
  std::mt19937_64 eng(43);
  for (int i = 0; i < 500; ++i) {
    Box3D a = oracle::random_box(eng, 2.0);
    Box3D b = oracle::random_box(eng, 2.0);
    a.yaw = 0.0;
    b.yaw = 0.0;
    EXPECT_NEAR(rotated_iou3d(a, b), aligned_iou3d(a, b), 1e-9);
  }
}

TEST(RotatedIou3d, HalfLengthOffsetMatchesAligned) {
  Box3D a, b;
  a.l = b.l = 2.0;
  b.cx = 1.0;
  EXPECT_NEAR(rotated_iou3d(a, b), aligned_iou3d(a, b), 1e-12);
}

TEST(RotatedIou3d, MonteCarloSpotCheck) {
  std::mt19937_64 eng(47);
  for (int i = 0; i < 20; ++i) {
    const Box3D a = oracle::random_box(eng, 1.5);
    const Box3D b = oracle::random_box(eng, 1.5);
    const double mc = oracle::mc_iou3d(a, b, 1000000, 2000 + i);
    EXPECT_NEAR(rotated_iou3d(a, b), mc, 5e-3);
  }
}

TEST(YawDifference, WrapsAroundPi) {
  EXPECT_NEAR(yaw_difference(kPi - 0.01, -kPi + 0.01), 0.02, 1e-12);
  EXPECT_NEAR(yaw_difference(0.0, kPi), kPi, 1e-12);
}

TEST(PointInBox, ClosedFaces) {
  Box3D b;
  EXPECT_TRUE(point_in_box(0.5, 0.0, 0.0, b));
  EXPECT_TRUE(point_in_box(0.5, 0.5, 0.5, b));
  EXPECT_FALSE(point_in_box(0.5001, 0.0, 0.0, b));
}
