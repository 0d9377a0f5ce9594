#pragma once
// Oriented-box geometry: BEV corners, rotated IoU via Sutherland-Hodgman
// convex clipping, axis-aligned 3D IoU, yaw arithmetic. Everything here is a
// pure function over value types and safe for concurrent use.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lidet {

inline constexpr double kPi = 3.14159265358979323846;

// Area below this is treated as an empty intersection.
inline constexpr double kDegenerateArea = 1e-12;
// Tolerance for the inside-of-edge test during clipping, so that collinear
// edges and shared vertices are kept rather than sliced away.
inline constexpr double kClipEps = 1e-12;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Wrap an angle into (-pi, pi]; idempotent, preserves the value mod 2*pi.
inline double normalize_yaw(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("normalize_yaw: non-finite angle");
  double t = std::fmod(theta, 2.0 * kPi);
  if (t <= -kPi) {
    t += 2.0 * kPi;
  } else if (t > kPi) {
    t -= 2.0 * kPi;
  }
  return t;
}

// Oriented, gravity-aligned 3D box. l is the extent along the heading
// direction, w across it, h vertical; yaw rotates about +z. score and
// iou_pred are populated on decoded detections, absent on ground truth.
// iou_pred is kept in raw IoU-branch target space until decoded.
struct Box3D {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double l = 1.0, w = 1.0, h = 1.0;
  double yaw = 0.0;
  int class_id = 0;
  std::optional<double> score;
  std::optional<double> iou_pred;

  double bev_area() const { return l * w; }
  double volume() const { return l * w * h; }

  bool valid() const {
    return l > 0.0 && w > 0.0 && h > 0.0 && std::isfinite(cx) && std::isfinite(cy) &&
           std::isfinite(cz) && std::isfinite(yaw) && std::isfinite(l) && std::isfinite(w) &&
           std::isfinite(h);
  }
};

// Convex polygon in the ground plane, vertices in strictly CCW order.
struct Polygon2D {
  std::vector<Point2> vertices;

  // Shoelace area; positive for CCW winding.
  double area() const {
    const size_t n = vertices.size();
    if (n < 3) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const Point2& p = vertices[i];
      const Point2& q = vertices[(i + 1) % n];
      acc += p.x * q.y - q.x * p.y;
    }
    return 0.5 * acc;
  }

  Point2 centroid() const {
    // Area-weighted centroid of a simple polygon.
    const size_t n = vertices.size();
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const Point2& p = vertices[i];
      const Point2& q = vertices[(i + 1) % n];
      const double cr = p.x * q.y - q.x * p.y;
      a += cr;
      cx += (p.x + q.x) * cr;
      cy += (p.y + q.y) * cr;
    }
    a *= 0.5;
    if (std::abs(a) < kDegenerateArea) return {0.0, 0.0};
    return {cx / (6.0 * a), cy / (6.0 * a)};
  }
};

// The four BEV corners of a box, CCW, starting at the front-left corner
// (+l/2, +w/2 in the box frame).
inline Polygon2D bev_corners(const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.l;
  const double hw = 0.5 * box.w;
  const std::array<Point2, 4> local = {{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  Polygon2D poly;
  poly.vertices.reserve(4);
  for (const Point2& p : local) {
    poly.vertices.push_back({box.cx + p.x * c - p.y * s, box.cy + p.x * s + p.y * c});
  }
  return poly;
}

namespace detail {

inline double cross_edge(const Point2& a, const Point2& b, const Point2& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

// Intersection of segment pq with the infinite line through edge ab.
inline Point2 line_intersection(const Point2& a, const Point2& b, const Point2& p,
                                const Point2& q) {
  const double a1 = b.y - a.y;
  const double b1 = a.x - b.x;
  const double c1 = a1 * a.x + b1 * a.y;
  const double a2 = q.y - p.y;
  const double b2 = p.x - q.x;
  const double c2 = a2 * p.x + b2 * p.y;
  const double det = a1 * b2 - a2 * b1;
  if (std::abs(det) < kClipEps) {
    // Parallel within tolerance; fall back to the segment midpoint, which for
    // collinear overlapping edges lies on both lines.
    return {0.5 * (p.x + q.x), 0.5 * (p.y + q.y)};
  }
  return {(b2 * c1 - b1 * c2) / det, (a1 * c2 - a2 * c1) / det};
}

}  // namespace detail

// Sutherland-Hodgman clipping of a convex subject polygon against a convex
// CCW clip polygon. Points on a clip edge (within kClipEps) are kept.
inline Polygon2D clip_convex(const Polygon2D& subject, const Polygon2D& clip) {
  Polygon2D out = subject;
  const size_t nc = clip.vertices.size();
  for (size_t e = 0; e < nc && !out.vertices.empty(); ++e) {
    const Point2& a = clip.vertices[e];
    const Point2& b = clip.vertices[(e + 1) % nc];
    Polygon2D in;
    in.vertices.swap(out.vertices);
    const size_t n = in.vertices.size();
    for (size_t i = 0; i < n; ++i) {
      const Point2& cur = in.vertices[i];
      const Point2& nxt = in.vertices[(i + 1) % n];
      const bool cur_in = detail::cross_edge(a, b, cur) >= -kClipEps;
      const bool nxt_in = detail::cross_edge(a, b, nxt) >= -kClipEps;
      if (cur_in) {
        out.vertices.push_back(cur);
        if (!nxt_in) out.vertices.push_back(detail::line_intersection(a, b, cur, nxt));
      } else if (nxt_in) {
        out.vertices.push_back(detail::line_intersection(a, b, cur, nxt));
      }
    }
  }
  return out;
}

namespace detail {

// Deterministic ordering of a box pair so that binary kernels are exactly
// symmetric in their arguments.
inline bool box_before(const Box3D& a, const Box3D& b) {
  if (a.cx != b.cx) return a.cx < b.cx;
  if (a.cy != b.cy) return a.cy < b.cy;
  if (a.cz != b.cz) return a.cz < b.cz;
  if (a.l != b.l) return a.l < b.l;
  if (a.w != b.w) return a.w < b.w;
  if (a.h != b.h) return a.h < b.h;
  return a.yaw < b.yaw;
}

}  // namespace detail

// Area of the BEV intersection of two boxes; 0 below the degeneracy floor.
// The subject/clip roles are canonicalized, so the result is bitwise
// symmetric in (a, b).
inline double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const Box3D& first = detail::box_before(b, a) ? b : a;
  const Box3D& second = detail::box_before(b, a) ? a : b;
  const Polygon2D inter = clip_convex(bev_corners(first), bev_corners(second));
  if (inter.vertices.size() < 3) return 0.0;
  const double area = inter.area();
  return area < kDegenerateArea ? 0.0 : area;
}

// Rotated IoU of the BEV footprints. Uses shoelace areas for both boxes so
// that identical footprints yield exactly 1.
inline double rotated_bev_iou(const Box3D& a, const Box3D& b) {
  const double inter = bev_intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double area_a = bev_corners(a).area();
  const double area_b = bev_corners(b).area();
  const double uni = area_a + area_b - inter;
  if (uni < kDegenerateArea) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

enum class AlignedIouMode {
  kRotatedCorners,  // AABB of the rotated BEV corners (default reading)
  kYawZero,         // treat both boxes as if yaw were 0
};

// IoU of the axis-aligned bounding boxes of the two (possibly rotated) boxes.
inline double aligned_iou3d(const Box3D& a, const Box3D& b,
                            AlignedIouMode mode = AlignedIouMode::kRotatedCorners) {
  auto aabb_xy = [mode](const Box3D& box, double& x0, double& x1, double& y0, double& y1) {
    if (mode == AlignedIouMode::kYawZero) {
      x0 = box.cx - 0.5 * box.l;
      x1 = box.cx + 0.5 * box.l;
      y0 = box.cy - 0.5 * box.w;
      y1 = box.cy + 0.5 * box.w;
      return;
    }
    const Polygon2D poly = bev_corners(box);
    x0 = y0 = std::numeric_limits<double>::infinity();
    x1 = y1 = -std::numeric_limits<double>::infinity();
    for (const Point2& p : poly.vertices) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  };
  double ax0, ax1, ay0, ay1, bx0, bx1, by0, by1;
  aabb_xy(a, ax0, ax1, ay0, ay1);
  aabb_xy(b, bx0, bx1, by0, by1);
  const double az0 = a.cz - 0.5 * a.h, az1 = a.cz + 0.5 * a.h;
  const double bz0 = b.cz - 0.5 * b.h, bz1 = b.cz + 0.5 * b.h;
  const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double iz = std::max(0.0, std::min(az1, bz1) - std::max(az0, bz0));
  const double inter = ix * iy * iz;
  const double vol_a = (ax1 - ax0) * (ay1 - ay0) * (az1 - az0);
  const double vol_b = (bx1 - bx0) * (by1 - by0) * (bz1 - bz0);
  const double uni = vol_a + vol_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// Rotated 3D IoU: BEV polygon intersection times z-overlap over the union.
// Reduces to aligned_iou3d when both yaws are zero.
inline double rotated_iou3d(const Box3D& a, const Box3D& b) {
  const double inter_bev = bev_intersection_area(a, b);
  if (inter_bev <= 0.0) return 0.0;
  const double az0 = a.cz - 0.5 * a.h, az1 = a.cz + 0.5 * a.h;
  const double bz0 = b.cz - 0.5 * b.h, bz1 = b.cz + 0.5 * b.h;
  const double zi = std::max(0.0, std::min(az1, bz1) - std::max(az0, bz0));
  const double inter = inter_bev * zi;
  // Volumes use the same shoelace areas and z-endpoint differences as the
  // intersection so identical boxes give exactly 1.
  const double vol_a = bev_corners(a).area() * (az1 - az0);
  const double vol_b = bev_corners(b).area() * (bz1 - bz0);
  const double uni = vol_a + vol_b - inter;
  if (uni < kDegenerateArea) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// Wrapped absolute yaw difference in [0, pi].
inline double yaw_difference(double a, double b) {
  double d = std::abs(normalize_yaw(a) - normalize_yaw(b));
  return d > kPi ? 2.0 * kPi - d : d;
}

// Closed rotated-3D containment test (points on a face count as inside).
inline bool point_in_box(double x, double y, double z, const Box3D& box, double eps = 1e-12) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = x - box.cx;
  const double dy = y - box.cy;
  const double lx = dx * c + dy * s;
  const double ly = -dx * s + dy * c;
  const double lz = z - box.cz;
  return std::abs(lx) <= 0.5 * box.l + eps && std::abs(ly) <= 0.5 * box.w + eps &&
         std::abs(lz) <= 0.5 * box.h + eps;
}

}  // namespace lidet
