#pragma once
// Independent test oracles. These deliberately avoid the library's
// polygon-clipping / greedy implementations: IoU comes from Monte Carlo
// point sampling with a direct containment test, NMS from a literal O(n^2)
// restatement of the greedy rule, gradients from central finite differences,
// and quadratic roots from long-double bisection.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lidet/geometry.hpp"

namespace oracle {

// Point-in-rotated-rect in the BEV plane, implemented directly.
inline bool in_bev_rect(double x, double y, const lidet::Box3D& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double dx = x - b.cx, dy = y - b.cy;
  const double lx = dx * c + dy * s;
  const double ly = -dx * s + dy * c;
  return std::abs(lx) <= 0.5 * b.l && std::abs(ly) <= 0.5 * b.w;
}

// Monte Carlo BEV IoU: sample uniformly inside the smaller box (exact by
// construction) and test membership in the other, so the estimator variance
// is bounded by the Bernoulli term alone.
inline double mc_bev_iou(const lidet::Box3D& a, const lidet::Box3D& b, int64_t samples,
                         uint64_t seed) {
  const lidet::Box3D& small = a.bev_area() <= b.bev_area() ? a : b;
  const lidet::Box3D& other = a.bev_area() <= b.bev_area() ? b : a;
  std::mt19937_64 eng(seed);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  const double c = std::cos(small.yaw), s = std::sin(small.yaw);
  int64_t hits = 0;
  for (int64_t i = 0; i < samples; ++i) {
    const double lx = (unit() - 0.5) * small.l;
    const double ly = (unit() - 0.5) * small.w;
    const double x = small.cx + lx * c - ly * s;
    const double y = small.cy + lx * s + ly * c;
    if (in_bev_rect(x, y, other)) ++hits;
  }
  const double inter = small.bev_area() * static_cast<double>(hits) / static_cast<double>(samples);
  const double uni = a.bev_area() + b.bev_area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Monte Carlo rotated 3D IoU by volume sampling inside the smaller box.
inline double mc_iou3d(const lidet::Box3D& a, const lidet::Box3D& b, int64_t samples,
                       uint64_t seed) {
  const lidet::Box3D& small = a.volume() <= b.volume() ? a : b;
  const lidet::Box3D& other = a.volume() <= b.volume() ? b : a;
  std::mt19937_64 eng(seed);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  const double c = std::cos(small.yaw), s = std::sin(small.yaw);
  int64_t hits = 0;
  for (int64_t i = 0; i < samples; ++i) {
    const double lx = (unit() - 0.5) * small.l;
    const double ly = (unit() - 0.5) * small.w;
    const double lz = (unit() - 0.5) * small.h;
    const double x = small.cx + lx * c - ly * s;
    const double y = small.cy + lx * s + ly * c;
    const double z = small.cz + lz;
    if (in_bev_rect(x, y, other) && std::abs(z - other.cz) <= 0.5 * other.h) ++hits;
  }
  const double inter = small.volume() * static_cast<double>(hits) / static_cast<double>(samples);
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Literal restatement of greedy class-specific NMS, quadratic and index-based.
inline std::vector<lidet::Box3D> brute_force_nms(std::vector<lidet::Box3D> boxes,
                                                 const std::vector<double>& thresh_per_class) {
  std::stable_sort(boxes.begin(), boxes.end(), [](const lidet::Box3D& a, const lidet::Box3D& b) {
    return a.score.value_or(0.0) > b.score.value_or(0.0);
  });
  std::vector<lidet::Box3D> kept;
  std::vector<char> removed(boxes.size(), 0);
  for (size_t i = 0; i < boxes.size(); ++i) {
    if (removed[i]) continue;
    kept.push_back(boxes[i]);
    for (size_t j = 0; j < boxes.size(); ++j) {
      if (j == i || removed[j]) continue;
      if (boxes[j].class_id != boxes[i].class_id) continue;
      if (lidet::rotated_bev_iou(boxes[i], boxes[j]) > thresh_per_class[boxes[i].class_id]) {
        removed[j] = 1;
      }
    }
    removed[i] = 1;
  }
  return kept;
}

// Central finite differences of a scalar function of a vector.
inline std::vector<double> finite_difference_grad(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double step = 1e-5) {
  std::vector<double> grad(x.size(), 0.0);
  for (size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

// Larger root of x^2 - b x + c = 0 by long-double bisection on [lo, hi].
inline long double larger_quadratic_root(long double b, long double c) {
  auto f = [&](long double x) { return x * x - b * x + c; };
  // The larger root lies at or above the vertex b/2.
  long double lo = b / 2.0L;
  long double hi = std::max(std::abs(b), 1.0L) * 2.0L + std::abs(c) + 1.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if (f(mid) <= 0.0L) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5L * (lo + hi);
}

// Full-sort top-k with the library's tie-break, restated directly.
struct FlatPeak {
  size_t flat;
  double value;
};
inline std::vector<FlatPeak> full_sort_topk(const std::vector<double>& map, int k) {
  std::vector<FlatPeak> all(map.size());
  for (size_t i = 0; i < map.size(); ++i) all[i] = {i, map[i]};
  std::sort(all.begin(), all.end(), [](const FlatPeak& a, const FlatPeak& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.flat < b.flat;
  });
  all.resize(std::min<size_t>(all.size(), static_cast<size_t>(k)));
  return all;
}

inline lidet::Box3D random_box(std::mt19937_64& eng, double center_span = 4.0) {
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  lidet::Box3D b;
  b.cx = (unit() - 0.5) * 2.0 * center_span;
  b.cy = (unit() - 0.5) * 2.0 * center_span;
  b.cz = (unit() - 0.5) * 2.0;
  b.l = 0.5 + unit() * 3.5;
  b.w = 0.5 + unit() * 3.5;
  b.h = 0.5 + unit() * 2.0;
  b.yaw = lidet::normalize_yaw((unit() - 0.5) * 2.0 * lidet::kPi);
  return b;
}

}  // namespace oracle
