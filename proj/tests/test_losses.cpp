#include <gtest/gtest.h>

#include <random>

#include "lidet/losses.hpp"
#include "oracles.hpp"

using namespace lidet;

namespace {

void expect_grad_matches_fd(const std::vector<double>& analytic, const std::vector<double>& fd,
                            double rel_tol = 1e-4, double abs_floor = 1e-8) {
  ASSERT_EQ(analytic.size(), fd.size());
  for (size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), abs_floor});
    EXPECT_LE(std::abs(analytic[i] - fd[i]) / denom, rel_tol)
        << "component " << i << ": analytic " << analytic[i] << " vs fd " << fd[i];
  }
}

}  // namespace

// Perfect-prediction limit: loss -> 0 as the clamp epsilon shrinks.
TEST(FocalLoss, PerfectPredictionLimit) {
  std::vector<double> target(16, 0.0);
  target[5] = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    std::vector<double> pred(16, eps);
    pred[5] = 1.0 - eps;
    const double v = focal_loss(pred, target, FocalVariant::kPenaltyReduced, eps).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-9);
}

// Single positive pixel at pred 0.5: value = -(0.5)^2 log(0.5).
TEST(FocalLoss, SinglePositivePixel) {
  const std::vector<double> pred{0.5};
  const std::vector<double> target{1.0};
  EXPECT_NEAR(focal_loss(pred, target).value, 0.17328679513998632, 1e-12);
}

TEST(FocalLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 eng(101);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  for (int variant = 0; variant < 2; ++variant) {
    const FocalVariant fv = variant == 0 ? FocalVariant::kPenaltyReduced : FocalVariant::kBinary;
    for (int trial = 0; trial < 100; ++trial) {
      const size_t n = 64;  // 8x8 map
      std::vector<double> pred(n), target(n, 0.0);
      for (size_t i = 0; i < n; ++i) pred[i] = 0.02 + 0.96 * unit();
      // a few positives, some soft gaussian values elsewhere
      target[eng() % n] = 1.0;
      target[eng() % n] = 1.0;
      for (int s = 0; s < 10; ++s) {
        const size_t at = eng() % n;
        if (target[at] != 1.0) target[at] = unit() * 0.9;
      }
      const LossResult res = focal_loss(pred, target, fv);
      const auto fd = oracle::finite_difference_grad(
          [&](const std::vector<double>& x) { return focal_loss(x, target, fv).value; }, pred);
      expect_grad_matches_fd(res.grad, fd);
    }
  }
}

TEST(L1Loss, ZeroAtPerfectPrediction) {
  const std::vector<double> v{1.0, -2.0, 3.0};
  const std::vector<uint8_t> mask{1, 1, 1};
  EXPECT_DOUBLE_EQ(l1_regression_loss(v, v, mask).value, 0.0);
}

TEST(L1Loss, MeanOfUnitResiduals) {
  const std::vector<double> pred{1.0, -1.0};
  const std::vector<double> target{0.0, 0.0};
  const std::vector<uint8_t> mask{1, 1};
  EXPECT_DOUBLE_EQ(l1_regression_loss(pred, target, mask).value, 1.0);
}

// Only masked-in entries contribute; four entries, two masked.
TEST(L1Loss, MaskedMean) {
  const std::vector<double> pred{1.0, 10.0, 3.0, 10.0};
  const std::vector<double> target{0.0, 0.0, 1.0, 0.0};
  const std::vector<uint8_t> mask{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(l1_regression_loss(pred, target, mask).value, (1.0 + 2.0) / 2.0);
}

TEST(L1Loss, EmptyMaskGivesZero) {
  const std::vector<double> pred{1.0};
  const std::vector<double> target{0.0};
  const std::vector<uint8_t> mask{0};
  const LossResult res = l1_regression_loss(pred, target, mask);
  EXPECT_DOUBLE_EQ(res.value, 0.0);
  EXPECT_DOUBLE_EQ(res.grad[0], 0.0);
}

TEST(L1Loss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 eng(103);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 24;
    std::vector<double> pred(n), target(n);
    std::vector<uint8_t> mask(n);
    for (size_t i = 0; i < n; ++i) {
      pred[i] = (unit() - 0.5) * 4.0;
      target[i] = (unit() - 0.5) * 4.0;
      mask[i] = eng() % 4 != 0;
      if (std::abs(pred[i] - target[i]) < 1e-3) pred[i] += 0.01;  // stay off the kink
    }
    const LossResult res = l1_regression_loss(pred, target, mask);
    const auto fd = oracle::finite_difference_grad(
        [&](const std::vector<double>& x) { return l1_regression_loss(x, target, mask).value; },
        pred);
    expect_grad_matches_fd(res.grad, fd);
  }
}

TEST(SmoothL1, ZeroResidual) {
  const std::vector<double> v{0.3};
  const std::vector<uint8_t> mask{1};
  EXPECT_DOUBLE_EQ(smooth_l1_loss(v, v, mask).value, 0.0);
}

TEST(SmoothL1, QuadraticBranch) {
  const std::vector<double> pred{0.5};
  const std::vector<double> target{0.0};
  const std::vector<uint8_t> mask{1};
  EXPECT_DOUBLE_EQ(smooth_l1_loss(pred, target, mask).value, 0.125);
}

TEST(SmoothL1, LinearBranch) {
  const std::vector<double> pred{2.0};
  const std::vector<double> target{0.0};
  const std::vector<uint8_t> mask{1};
  EXPECT_DOUBLE_EQ(smooth_l1_loss(pred, target, mask).value, 1.5);
}

TEST(SmoothL1, GradientMatchesFiniteDifferences) {
  std::mt19937_64 eng(107);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 24;
    std::vector<double> pred(n), target(n);
    std::vector<uint8_t> mask(n);
    for (size_t i = 0; i < n; ++i) {
      pred[i] = (unit() - 0.5) * 4.0;
      target[i] = (unit() - 0.5) * 4.0;
      mask[i] = eng() % 4 != 0;
      if (std::abs(std::abs(pred[i] - target[i]) - 1.0) < 1e-3) pred[i] += 0.01;  // off transition
    }
    const LossResult res = smooth_l1_loss(pred, target, mask);
    const auto fd = oracle::finite_difference_grad(
        [&](const std::vector<double>& x) { return smooth_l1_loss(x, target, mask).value; }, pred);
    expect_grad_matches_fd(res.grad, fd);
  }
}

TEST(TotalLoss, AllZero) {
  EXPECT_DOUBLE_EQ(total_loss({}, {}).total, 0.0);
}

// All parts 1 with every lambda 2: 1 + 6 * 2 = 13.
TEST(TotalLoss, AllOnesDefaultWeights) {
  LossBreakdown parts;
  parts.heat = parts.off = parts.z = parts.size = parts.ori = parts.iou = parts.kps = 1.0;
  EXPECT_DOUBLE_EQ(total_loss(parts, LossWeights{}).total, 13.0);
}

TEST(TotalLoss, ZeroWeightDisablesTerm) {
  LossBreakdown parts;
  parts.kps = 100.0;
  LossWeights w;
  w.kps = 0.0;
  EXPECT_DOUBLE_EQ(total_loss(parts, w).total, 0.0);
}

// Linearity: scaling one part scales the total by lambda times the delta.
TEST(TotalLoss, LinearInEachPart) {
  std::mt19937_64 eng(109);
  auto unit = [&eng] { return (eng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 50; ++trial) {
    LossBreakdown parts;
    parts.heat = unit();
    parts.off = unit();
    parts.z = unit();
    parts.size = unit();
    parts.ori = unit();
    parts.iou = unit();
    parts.kps = unit();
    LossWeights w;
    w.off = unit() * 4.0;
    const double base = total_loss(parts, w).total;
    LossBreakdown scaled = parts;
    const double delta = unit();
    scaled.off += delta;
    EXPECT_NEAR(total_loss(scaled, w).total, base + w.off * delta, 1e-12);
  }
}

TEST(PairwiseSum, MatchesSequentialOnSmallInput) {
  const std::vector<double> v{0.1, 0.2, 0.3, 0.4};
  EXPECT_NEAR(pairwise_sum(v), 1.0, 1e-15);
}
