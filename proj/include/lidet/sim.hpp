#pragma once
// Synthetic scenes and a parameterized noisy detector that manufactures
// classification-localization misalignment: detection quality is controlled
// by geometric noise, and scores are tied to the true IoU through a Gaussian
// copula with correlation rho, so rho < 1 reproduces the misalignment the
// IoU-aware rescoring is meant to fix.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lidet/decode.hpp"
#include "lidet/eval.hpp"
#include "lidet/frame.hpp"
#include "lidet/geometry.hpp"
#include "lidet/parallel.hpp"
#include "lidet/rng.hpp"
#include "lidet/targets.hpp"

namespace lidet {

struct ClassGeometrySpec {
  std::array<int, 2> count_range{3, 6};
  std::array<double, 2> length_range{3.8, 5.0};
  std::array<double, 2> width_range{1.7, 2.1};
  std::array<double, 2> height_range{1.5, 1.8};
};

struct SceneSpec {
  std::vector<ClassGeometrySpec> classes{
      {{3, 6}, {3.8, 5.0}, {1.7, 2.1}, {1.5, 1.8}},   // vehicle-like
      {{3, 6}, {0.6, 0.9}, {0.6, 0.9}, {1.6, 1.9}},   // pedestrian-like
      {{2, 4}, {1.6, 2.0}, {0.6, 0.8}, {1.5, 1.8}}};  // cyclist-like
  std::array<int, 2> points_per_object{3, 60};
  int background_points = 200;
  double area_half_extent = 30.0;
  uint64_t seed = 1;

  void validate() const {
    if (classes.empty()) throw std::invalid_argument("SceneSpec: no classes");
    for (const ClassGeometrySpec& c : classes) {
      if (c.count_range[0] < 0 || c.count_range[1] < c.count_range[0])
        throw std::invalid_argument("SceneSpec: bad count range");
      auto pos = [](const std::array<double, 2>& r) { return r[0] > 0.0 && r[1] >= r[0]; };
      if (!pos(c.length_range) || !pos(c.width_range) || !pos(c.height_range))
        throw std::invalid_argument("SceneSpec: bad dimension range");
    }
    if (points_per_object[0] < 0 || points_per_object[1] < points_per_object[0])
      throw std::invalid_argument("SceneSpec: bad points_per_object range");
    if (background_points < 0) throw std::invalid_argument("SceneSpec: negative background");
    if (!(area_half_extent > 0.0)) throw std::invalid_argument("SceneSpec: non-positive area");
  }
};

struct NoiseSpec {
  double center_sigma = 0.0;
  double dim_sigma = 0.0;
  double yaw_sigma = 0.0;
  double score_iou_corr = 0.0;  // rho in [-1, 1]
  double fp_rate = 0.0;         // Poisson mean per scene
  double fn_rate = 0.0;         // dropout probability per ground truth
  double iou_head_sigma = 0.0;  // noise on the IoU branch, target space

  void validate() const {
    if (center_sigma < 0 || dim_sigma < 0 || yaw_sigma < 0 || iou_head_sigma < 0)
      throw std::invalid_argument("NoiseSpec: negative sigma");
    if (!(score_iou_corr >= -1.0 && score_iou_corr <= 1.0))
      throw std::invalid_argument("NoiseSpec: rho outside [-1, 1]");
    if (fp_rate < 0.0) throw std::invalid_argument("NoiseSpec: negative fp_rate");
    if (!(fn_rate >= 0.0 && fn_rate <= 1.0))
      throw std::invalid_argument("NoiseSpec: fn_rate outside [0, 1]");
  }
};

namespace detail {

// Uniform point on the box surface, faces weighted by area to imitate
// LiDAR returns hitting the shell.
inline CloudPoint sample_surface_point(const Box3D& b, Rng& rng) {
  const double a_top = b.l * b.w;   // +-z faces
  const double a_side = b.l * b.h;  // +-y faces
  const double a_end = b.w * b.h;   // +-x faces
  const double total = 2.0 * (a_top + a_side + a_end);
  const double u = rng.uniform(0.0, total);
  double lx, ly, lz;
  if (u < 2.0 * a_top) {
    lx = rng.uniform(-0.5, 0.5) * b.l;
    ly = rng.uniform(-0.5, 0.5) * b.w;
    lz = (u < a_top ? 0.5 : -0.5) * b.h;
  } else if (u < 2.0 * (a_top + a_side)) {
    const double v = u - 2.0 * a_top;
    lx = rng.uniform(-0.5, 0.5) * b.l;
    ly = (v < a_side ? 0.5 : -0.5) * b.w;
    lz = rng.uniform(-0.5, 0.5) * b.h;
  } else {
    const double v = u - 2.0 * (a_top + a_side);
    lx = (v < a_end ? 0.5 : -0.5) * b.l;
    ly = rng.uniform(-0.5, 0.5) * b.w;
    lz = rng.uniform(-0.5, 0.5) * b.h;
  }
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  return {b.cx + lx * c - ly * s, b.cy + lx * s + ly * c, b.cz + lz, rng.uniform()};
}

}  // namespace detail

// Place non-overlapping boxes by rejection sampling, then sample points on
// their surfaces plus uniform background clutter. Placement gives up after
// 10^4 rejections and returns a scene with fewer objects.
inline Frame generate_scene(const SceneSpec& spec, Rng& rng, std::string frame_id = {}) {
  spec.validate();
  Frame frame;
  frame.id = std::move(frame_id);
  double z_top = 0.0;
  for (const ClassGeometrySpec& c : spec.classes) z_top = std::max(z_top, c.height_range[1]);

  int rejections = 0;
  constexpr int kMaxRejections = 10000;
  for (size_t cls = 0; cls < spec.classes.size(); ++cls) {
    const ClassGeometrySpec& cs = spec.classes[cls];
    const int want = static_cast<int>(rng.uniform_int(cs.count_range[0], cs.count_range[1]));
    int placed = 0;
    while (placed < want && rejections < kMaxRejections) {
      Box3D box;
      box.class_id = static_cast<int>(cls);
      box.l = rng.uniform(cs.length_range[0], cs.length_range[1]);
      box.w = rng.uniform(cs.width_range[0], cs.width_range[1]);
      box.h = rng.uniform(cs.height_range[0], cs.height_range[1]);
      box.cx = rng.uniform(-spec.area_half_extent, spec.area_half_extent);
      box.cy = rng.uniform(-spec.area_half_extent, spec.area_half_extent);
      box.cz = 0.5 * box.h;
      box.yaw = normalize_yaw(rng.uniform(-kPi, kPi));
      bool collides = false;
      for (const GroundTruth& gt : frame.labels) {
        if (rotated_bev_iou(box, gt.box) > 0.0) {
          collides = true;
          break;
        }
      }
      if (collides) {
        ++rejections;
        continue;
      }
      GroundTruth gt;
      gt.box = box;
      gt.num_points = static_cast<int>(
          rng.uniform_int(spec.points_per_object[0], spec.points_per_object[1]));
      for (int p = 0; p < gt.num_points; ++p) {
        frame.cloud.points.push_back(detail::sample_surface_point(box, rng));
      }
      frame.labels.push_back(gt);
      ++placed;
    }
  }
  for (int p = 0; p < spec.background_points; ++p) {
    frame.cloud.points.push_back({rng.uniform(-spec.area_half_extent, spec.area_half_extent),
                                  rng.uniform(-spec.area_half_extent, spec.area_half_extent),
                                  rng.uniform(0.0, std::max(z_top, 1.0)), rng.uniform()});
  }
  return frame;
}

// Simulate a detector over the ground truth: FN dropouts, Gaussian pose and
// size noise, a Gaussian-copula score with corr(score, true IoU) ~ rho, an
// IoU branch output in target space with additive noise, and Poisson false
// positives with class-conditional sizes derived from the frame's labels.
inline DetectionSet synth_detector(const Frame& frame, const NoiseSpec& noise, Rng& rng) {
  noise.validate();
  DetectionSet out;
  out.frame_id = frame.id;

  struct Candidate {
    Box3D box;
    double true_iou = 0.0;
  };
  std::vector<Candidate> candidates;

  for (const GroundTruth& gt : frame.labels) {
    if (rng.uniform() < noise.fn_rate) continue;
    Candidate cand;
    Box3D b = gt.box;
    b.cx += rng.normal(0.0, noise.center_sigma);
    b.cy += rng.normal(0.0, noise.center_sigma);
    b.cz += rng.normal(0.0, noise.center_sigma);
    b.l = std::max(0.05, b.l + rng.normal(0.0, noise.dim_sigma));
    b.w = std::max(0.05, b.w + rng.normal(0.0, noise.dim_sigma));
    b.h = std::max(0.05, b.h + rng.normal(0.0, noise.dim_sigma));
    b.yaw = normalize_yaw(b.yaw + rng.normal(0.0, noise.yaw_sigma));
    cand.box = b;
    cand.true_iou = rotated_iou3d(b, gt.box);
    candidates.push_back(cand);
  }

  // Class-conditional size ranges for false positives, from the frame labels.
  int num_classes = 1;
  for (const GroundTruth& gt : frame.labels)
    num_classes = std::max(num_classes, gt.box.class_id + 1);
  std::vector<std::array<double, 6>> dim_ranges(
      num_classes, {0.5, 5.0, 0.5, 5.0, 0.5, 5.0});  // l_lo, l_hi, w_lo, w_hi, h_lo, h_hi
  std::vector<bool> seen(num_classes, false);
  double ext = 10.0;
  for (const GroundTruth& gt : frame.labels) {
    const Box3D& b = gt.box;
    auto& r = dim_ranges[b.class_id];
    if (!seen[b.class_id]) {
      r = {b.l, b.l, b.w, b.w, b.h, b.h};
      seen[b.class_id] = true;
    } else {
      r[0] = std::min(r[0], b.l);
      r[1] = std::max(r[1], b.l);
      r[2] = std::min(r[2], b.w);
      r[3] = std::max(r[3], b.w);
      r[4] = std::min(r[4], b.h);
      r[5] = std::max(r[5], b.h);
    }
    ext = std::max({ext, std::abs(b.cx), std::abs(b.cy)});
  }

  const int num_fp = rng.poisson(noise.fp_rate);
  for (int i = 0; i < num_fp; ++i) {
    Candidate cand;
    Box3D b;
    b.class_id = static_cast<int>(rng.uniform_int(0, num_classes - 1));
    const auto& r = dim_ranges[b.class_id];
    b.l = rng.uniform(r[0], r[1]);
    b.w = rng.uniform(r[2], r[3]);
    b.h = rng.uniform(r[4], r[5]);
    b.cx = rng.uniform(-ext, ext);
    b.cy = rng.uniform(-ext, ext);
    b.cz = 0.5 * b.h;
    b.yaw = normalize_yaw(rng.uniform(-kPi, kPi));
    cand.box = b;
    double best = 0.0;
    for (const GroundTruth& gt : frame.labels) {
      if (gt.box.class_id != b.class_id) continue;
      best = std::max(best, rotated_iou3d(b, gt.box));
    }
    cand.true_iou = best;
    candidates.push_back(cand);
  }

  // Simulated IoU branch: target-space value plus noise, decoded to [0, 1].
  std::vector<double> iou_preds(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double target =
        iou_target_transform(candidates[i].true_iou) + rng.normal(0.0, noise.iou_head_sigma);
    iou_preds[i] = iou_target_inverse(target);
  }

  // Gaussian copula: z = Phi^-1(midrank of true IoU), latent =
  // rho * z + sqrt(1 - rho^2) * eps, score = logistic(latent). Midranks give
  // equal IoUs equal normal scores, so with rho = +-1 the score is an exact
  // monotone function of the true IoU.
  const size_t n = candidates.size();
  std::vector<double> midrank(n, 0.0);
  {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return candidates[a].true_iou < candidates[b].true_iou;
    });
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n &&
             candidates[order[j + 1]].true_iou == candidates[order[i]].true_iou) {
        ++j;
      }
      const double mr = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based midrank
      for (size_t k = i; k <= j; ++k) midrank[order[k]] = mr;
      i = j + 1;
    }
  }
  const double rho = noise.score_iou_corr;
  const double indep = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  for (size_t i = 0; i < n; ++i) {
    const double u = midrank[i] / (static_cast<double>(n) + 1.0);
    const double z = inverse_normal_cdf(u);
    const double eps = rng.normal();  // drawn unconditionally to keep draw order fixed
    const double latent = rho * z + indep * eps;
    Box3D box = candidates[i].box;
    box.score = 1.0 / (1.0 + std::exp(-latent));
    box.iou_pred = iou_preds[i];
    out.boxes.push_back(box);
  }
  out.sort_by_score();
  return out;
}

// One row of the alpha sweep.
struct AblationRow {
  double alpha = 0.0;
  EvalReport report;
};

// Sweep Eq-1 alphas over pre-generated frames: detections are synthesized
// once per frame (seed split per frame), then rescored with each alpha,
// filtered by class-specific NMS and evaluated.
inline std::vector<AblationRow> ablate_alpha(const std::vector<Frame>& frames,
                                             const std::vector<double>& alphas,
                                             const NoiseSpec& noise, const RescoreParams& base,
                                             const EvalConfig& eval_cfg, int num_classes,
                                             uint64_t seed, int threads = 1) {
  noise.validate();
  base.validate(num_classes);
  std::vector<DetectionSet> raw(frames.size());
  parallel_for(static_cast<int64_t>(frames.size()), threads, [&](int64_t i) {
    Rng rng(split_seed(seed, static_cast<uint64_t>(i)));
    raw[i] = synth_detector(frames[i], noise, rng);
  });
  std::vector<AblationRow> rows;
  rows.reserve(alphas.size());
  for (double alpha : alphas) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("ablate_alpha: alpha outside [0, 1]");
    RescoreParams params = base;
    params.alpha_per_class.assign(num_classes, alpha);
    std::vector<EvalInput> inputs(frames.size());
    parallel_for(static_cast<int64_t>(frames.size()), threads, [&](int64_t i) {
      DetectionSet processed = post_process(raw[i], params);
      inputs[i].frame_id = frames[i].id;
      inputs[i].detections = std::move(processed.boxes);
      inputs[i].labels = frames[i].labels;
    });
    AblationRow row;
    row.alpha = alpha;
    row.report = evaluate(inputs, num_classes, eval_cfg);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lidet
