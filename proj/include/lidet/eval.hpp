#pragma once
// Detection metrics: L1/L2 difficulty split, greedy IoU matching, and
// 101-point interpolated AP plus the heading-weighted APH variant.
//
// The matcher thresholds (0.7 vehicle, 0.5 pedestrian/cyclist), the 101-point
// interpolation and the heading weight 1 - |dtheta|/pi follow the external
// benchmark conventions; none of them is prescribed by the rescoring method
// itself, and all are configurable.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lidet/decode.hpp"
#include "lidet/frame.hpp"
#include "lidet/geometry.hpp"

namespace lidet {

enum class Difficulty { kL1 = 0, kL2 = 1 };

// L1 = more than five points and not annotated LEVEL_2. Boxes with at least
// one point belong to the L2 pool; the L1 pool is a subset of it. Boxes with
// zero points belong to neither pool.
inline Difficulty assign_difficulty(int point_count, bool annotated_l2) {
  if (point_count < 0) throw std::invalid_argument("assign_difficulty: negative point count");
  return (point_count > 5 && !annotated_l2) ? Difficulty::kL1 : Difficulty::kL2;
}

struct EvalConfig {
  std::vector<double> iou_thresh_per_class{0.7, 0.5, 0.5};
  bool exact_area = false;  // false: 101-point interpolation
};

// Greedy matching for one frame and one class: detections in descending
// score order take the unmatched GT with the highest rotated 3D IoU >= the
// threshold (ties to the lowest GT index). Returns det index -> GT index or
// -1 for unmatched.
inline std::vector<int> match_detections(std::span<const Box3D> dets, std::span<const Box3D> gts,
                                         double iou_thresh) {
  std::vector<size_t> order(dets.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dets[a].score.value_or(0.0) > dets[b].score.value_or(0.0);
  });
  std::vector<int> det_to_gt(dets.size(), -1);
  std::vector<char> gt_used(gts.size(), 0);
  for (size_t oi : order) {
    double best_iou = -1.0;
    int best_gt = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g]) continue;
      const double iou = rotated_iou3d(dets[oi], gts[g]);
      if (iou > 0.0 && iou >= iou_thresh && iou > best_iou) {
        best_iou = iou;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      det_to_gt[oi] = best_gt;
      gt_used[best_gt] = 1;
    }
  }
  return det_to_gt;
}

// One scored detection outcome entering the PR aggregation.
struct MatchRecord {
  double score = 0.0;
  bool tp = false;
  double heading_weight = 1.0;  // 1 - wrapped |yaw error| / pi, TPs only
};

struct PrPoint {
  double score, recall, precision, recall_h, precision_h;
};

struct MetricEntry {
  std::optional<double> ap;
  std::optional<double> aph;
  int64_t gt = 0, tp = 0, fp = 0;
};

struct EvalReport {
  // per_class[class][level]; level index: 0 = L1, 1 = L2
  std::vector<std::array<MetricEntry, 2>> per_class;
  std::array<MetricEntry, 2> all;  // mean over classes with defined metrics
  std::vector<std::array<std::vector<PrPoint>, 2>> pr_curves;
};

namespace detail {

// Area under the interpolated PR envelope. points must be in detection-rank
// order (cumulative curve).
inline double interpolated_ap(const std::vector<std::array<double, 2>>& rp, bool exact_area) {
  if (rp.empty()) return 0.0;
  // Upper envelope: max precision at recall >= r.
  std::vector<std::array<double, 2>> env = rp;
  for (size_t i = env.size(); i-- > 1;) env[i - 1][1] = std::max(env[i - 1][1], env[i][1]);
  if (!exact_area) {
    double acc = 0.0;
    for (int s = 0; s <= 100; ++s) {
      const double r = s / 100.0;
      double p = 0.0;
      for (const auto& e : env) {
        if (e[0] >= r - 1e-12) {
          p = e[1];
          break;
        }
      }
      acc += p;
    }
    return acc / 101.0;
  }
  double acc = 0.0, prev_r = 0.0;
  for (const auto& e : env) {
    if (e[0] > prev_r) {
      acc += (e[0] - prev_r) * e[1];
      prev_r = e[0];
    }
  }
  return acc;
}

}  // namespace detail

// PR aggregation for one class/level: records from all frames, total counted
// GT. Zero GT leaves the metrics absent.
inline MetricEntry compute_ap_aph(std::vector<MatchRecord> records, int64_t total_gt,
                                  const EvalConfig& cfg, std::vector<PrPoint>* curve = nullptr) {
  MetricEntry entry;
  entry.gt = total_gt;
  std::stable_sort(records.begin(), records.end(),
                   [](const MatchRecord& a, const MatchRecord& b) { return a.score > b.score; });
  int64_t tp = 0, fp = 0;
  for (const MatchRecord& r : records) (r.tp ? tp : fp)++;
  entry.tp = tp;
  entry.fp = fp;
  if (total_gt == 0) return entry;

  std::vector<std::array<double, 2>> rp, rp_h;
  rp.reserve(records.size());
  rp_h.reserve(records.size());
  double cum_tp = 0.0, cum_h = 0.0;
  const double gt = static_cast<double>(total_gt);
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].tp) {
      cum_tp += 1.0;
      cum_h += records[i].heading_weight;
    }
    const double rank = static_cast<double>(i + 1);
    rp.push_back({cum_tp / gt, cum_tp / rank});
    rp_h.push_back({cum_h / gt, cum_h / rank});
    if (curve) {
      curve->push_back({records[i].score, cum_tp / gt, cum_tp / rank, cum_h / gt, cum_h / rank});
    }
  }
  entry.ap = detail::interpolated_ap(rp, cfg.exact_area);
  entry.aph = detail::interpolated_ap(rp_h, cfg.exact_area);
  if (*entry.aph > *entry.ap + 1e-12)
    throw std::logic_error("compute_ap_aph: APH exceeded AP");
  return entry;
}

// Frame input to the evaluator: scored detections plus labeled ground truth.
struct EvalInput {
  std::string frame_id;
  std::vector<Box3D> detections;
  std::vector<GroundTruth> labels;
};

// Full evaluation over frames: per class and difficulty level, greedy
// matching then PR aggregation. Ground truth outside a level's pool (zero
// point boxes for both levels, L2-only boxes for the L1 metric) is "ignore":
// detections matched to it are neither TP nor FP.
inline EvalReport evaluate(const std::vector<EvalInput>& frames, int num_classes,
                           const EvalConfig& cfg) {
  if (static_cast<int>(cfg.iou_thresh_per_class.size()) != num_classes)
    throw std::invalid_argument("evaluate: iou_thresh_per_class must have length K");
  EvalReport report;
  report.per_class.resize(num_classes);
  report.pr_curves.resize(num_classes);

  for (int cls = 0; cls < num_classes; ++cls) {
    for (int lvl = 0; lvl < 2; ++lvl) {
      std::vector<MatchRecord> records;
      int64_t total_gt = 0;
      for (const EvalInput& frame : frames) {
        std::vector<Box3D> gt_boxes;
        std::vector<char> counted;
        for (const GroundTruth& gt : frame.labels) {
          if (gt.box.class_id != cls) continue;
          // Zero-point boxes stay matchable (so detections on them are not
          // punished) but belong to neither difficulty pool.
          const bool labeled = gt.num_points > 0;
          const bool is_l1 =
              labeled && assign_difficulty(gt.num_points, gt.annotated_l2) == Difficulty::kL1;
          const bool in_pool = labeled && (lvl == 1 || is_l1);  // L2 pools every labeled box
          gt_boxes.push_back(gt.box);
          counted.push_back(in_pool ? 1 : 0);
          if (in_pool) ++total_gt;
        }
        std::vector<Box3D> dets;
        for (const Box3D& d : frame.detections) {
          if (d.class_id == cls) dets.push_back(d);
        }
        const std::vector<int> det_to_gt =
            match_detections(dets, gt_boxes, cfg.iou_thresh_per_class[cls]);
        for (size_t di = 0; di < dets.size(); ++di) {
          const int g = det_to_gt[di];
          if (g >= 0 && !counted[g]) continue;  // matched an ignored box
          MatchRecord rec;
          rec.score = dets[di].score.value_or(0.0);
          rec.tp = g >= 0;
          if (rec.tp) {
            rec.heading_weight = 1.0 - yaw_difference(dets[di].yaw, gt_boxes[g].yaw) / kPi;
          }
          records.push_back(rec);
        }
      }
      report.per_class[cls][lvl] =
          compute_ap_aph(std::move(records), total_gt, cfg, &report.pr_curves[cls][lvl]);
    }
  }

  for (int lvl = 0; lvl < 2; ++lvl) {
    double ap = 0.0, aph = 0.0;
    int n = 0;
    for (int cls = 0; cls < num_classes; ++cls) {
      const MetricEntry& e = report.per_class[cls][lvl];
      report.all[lvl].gt += e.gt;
      report.all[lvl].tp += e.tp;
      report.all[lvl].fp += e.fp;
      if (e.ap) {
        ap += *e.ap;
        aph += *e.aph;
        ++n;
      }
    }
    if (n > 0) {
      report.all[lvl].ap = ap / n;
      report.all[lvl].aph = aph / n;
    }
  }
  return report;
}

}  // namespace lidet
