#pragma once
// Loss values and analytic gradients for the seven sub-heads, plus the
// weighted total. All reductions use pairwise summation so results are
// bit-stable regardless of how callers batch the work.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace lidet {

// Pairwise (tree) summation; deterministic and accurate for long vectors.
inline double pairwise_sum(std::span<const double> v) {
  const size_t n = v.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // d(value)/d(pred), same length as pred
};

enum class FocalVariant {
  kPenaltyReduced,  // Gaussian-target form: negatives weighted by (1-y)^4
  kBinary,          // original binary-target form: no (1-y)^4 weighting
};

// Pixel-wise focal loss on heatmaps with Gaussian-valued targets. Positive
// pixels are those with target exactly 1; the loss is normalized by their
// count (floored at 1). Predictions are clamped into [eps, 1-eps] before the
// logs; gradients are exact for predictions inside the clamp range.
inline LossResult focal_loss(std::span<const double> pred, std::span<const double> target,
                             FocalVariant variant = FocalVariant::kPenaltyReduced,
                             double eps = 1e-6) {
  if (pred.size() != target.size()) throw std::invalid_argument("focal_loss: shape mismatch");
  const size_t n = pred.size();
  size_t num_pos = 0;
  for (size_t i = 0; i < n; ++i) {
    if (target[i] == 1.0) ++num_pos;
  }
  const double norm = static_cast<double>(std::max<size_t>(num_pos, 1));

  std::vector<double> terms(n, 0.0);
  LossResult res;
  res.grad.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double y = target[i];
    const double p = std::clamp(pred[i], eps, 1.0 - eps);
    if (y == 1.0) {
      const double om = 1.0 - p;
      terms[i] = om * om * std::log(p);
      res.grad[i] = -(-2.0 * om * std::log(p) + om * om / p) / norm;
    } else {
      const double nw = variant == FocalVariant::kPenaltyReduced
                            ? std::pow(1.0 - y, 4.0)
                            : 1.0;
      terms[i] = nw * p * p * std::log1p(-p);
      res.grad[i] = -nw * (2.0 * p * std::log1p(-p) - p * p / (1.0 - p)) / norm;
    }
  }
  res.value = -pairwise_sum(terms) / norm;
  return res;
}

// Masked mean absolute error; gradient is sign(residual) / #masked.
inline LossResult l1_regression_loss(std::span<const double> pred, std::span<const double> target,
                                     std::span<const uint8_t> mask) {
  if (pred.size() != target.size() || pred.size() != mask.size())
    throw std::invalid_argument("l1_regression_loss: shape mismatch");
  const size_t n = pred.size();
  size_t active = 0;
  for (uint8_t m : mask) active += m ? 1 : 0;
  LossResult res;
  res.grad.assign(n, 0.0);
  if (active == 0) return res;
  std::vector<double> terms(n, 0.0);
  const double inv = 1.0 / static_cast<double>(active);
  for (size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double r = pred[i] - target[i];
    terms[i] = std::abs(r);
    res.grad[i] = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * inv;
  }
  res.value = pairwise_sum(terms) * inv;
  return res;
}

// Masked-mean Huber loss: 0.5 r^2 / delta inside the transition, |r| - delta/2
// outside. delta = 1 gives the usual smooth-L1.
inline LossResult smooth_l1_loss(std::span<const double> pred, std::span<const double> target,
                                 std::span<const uint8_t> mask, double delta = 1.0) {
  if (pred.size() != target.size() || pred.size() != mask.size())
    throw std::invalid_argument("smooth_l1_loss: shape mismatch");
  if (!(delta > 0.0)) throw std::invalid_argument("smooth_l1_loss: delta must be positive");
  const size_t n = pred.size();
  size_t active = 0;
  for (uint8_t m : mask) active += m ? 1 : 0;
  LossResult res;
  res.grad.assign(n, 0.0);
  if (active == 0) return res;
  std::vector<double> terms(n, 0.0);
  const double inv = 1.0 / static_cast<double>(active);
  for (size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double r = pred[i] - target[i];
    const double ar = std::abs(r);
    if (ar < delta) {
      terms[i] = 0.5 * r * r / delta;
      res.grad[i] = r / delta * inv;
    } else {
      terms[i] = ar - 0.5 * delta;
      res.grad[i] = (r > 0.0 ? 1.0 : -1.0) * inv;
    }
  }
  res.value = pairwise_sum(terms) * inv;
  return res;
}

// Per-sub-head weights; the heatmap term is unweighted.
struct LossWeights {
  double off = 2.0;
  double z = 2.0;
  double size = 2.0;
  double ori = 2.0;
  double iou = 2.0;
  double kps = 2.0;
};

struct LossBreakdown {
  double heat = 0.0, off = 0.0, z = 0.0, size = 0.0, ori = 0.0, iou = 0.0, kps = 0.0;
  double total = 0.0;
};

// total = heat + sum_i lambda_i * part_i.
inline LossBreakdown total_loss(const LossBreakdown& parts, const LossWeights& w) {
  LossBreakdown out = parts;
  out.total = parts.heat + w.off * parts.off + w.z * parts.z + w.size * parts.size +
              w.ori * parts.ori + w.iou * parts.iou + w.kps * parts.kps;
  return out;
}

}  // namespace lidet
