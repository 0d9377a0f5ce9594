#pragma once
// Head output maps -> scored boxes: global top-k peak extraction (the paper
// replaces max-pooling with class-specific NMS, so no local-max suppression
// here), box assembly, IoU-aware rescoring, and class-specific rotated NMS.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lidet/geometry.hpp"
#include "lidet/targets.hpp"
#include "lidet/voxel.hpp"

namespace lidet {

// Dense per-pixel head output. Regression channels are row-major [ch][H][W];
// the IoU channel stays in target space [-1, 1] until decoded.
struct HeadMaps {
  int num_classes = 0;
  int height = 0;
  int width = 0;
  std::vector<double> heatmap;      // [K][H][W]
  std::vector<double> offset;       // [2][H][W] = (dx, dy)
  std::vector<double> z;            // [H][W]
  std::vector<double> size;         // [3][H][W] = (l, w, h)
  std::vector<double> orientation;  // [2][H][W] = (sin, cos)
  std::vector<double> iou;          // [H][W]

  size_t plane() const { return static_cast<size_t>(height) * width; }
};

// Scatter sparse per-object targets into dense head maps (unwritten pixels
// stay zero). Exact inverse pairing for the codec round trip and the
// simulator's synthetic head output.
inline HeadMaps to_head_maps(const TargetMaps& t) {
  HeadMaps m;
  m.num_classes = t.num_classes;
  m.height = t.height;
  m.width = t.width;
  const size_t plane = m.plane();
  m.heatmap = t.heatmap;
  m.offset.assign(2 * plane, 0.0);
  m.z.assign(plane, 0.0);
  m.size.assign(3 * plane, 0.0);
  m.orientation.assign(2 * plane, 0.0);
  m.iou.assign(plane, 0.0);
  for (int i = 0; i < t.count(); ++i) {
    if (!t.mask[i]) continue;
    const size_t px = static_cast<size_t>(t.indices[i]);
    m.offset[px] = t.offset[i][0];
    m.offset[plane + px] = t.offset[i][1];
    m.z[px] = t.z[i];
    m.size[px] = t.size[i][0];
    m.size[plane + px] = t.size[i][1];
    m.size[2 * plane + px] = t.size[i][2];
    m.orientation[px] = t.orientation[i][0];
    m.orientation[plane + px] = t.orientation[i][1];
    m.iou[px] = t.iou_target[i];
  }
  return m;
}

struct Peak {
  int class_id = 0;
  int row = 0;
  int col = 0;
  double score = 0.0;
};

// The k highest heatmap values across all class channels, descending; ties
// broken by (class, row, col) ascending.
inline std::vector<Peak> topk_peaks(std::span<const double> heatmap, int num_classes, int height,
                                    int width, int k) {
  const size_t total = static_cast<size_t>(num_classes) * height * width;
  if (heatmap.size() != total) throw std::invalid_argument("topk_peaks: heatmap size mismatch");
  if (k < 0 || static_cast<size_t>(k) > total)
    throw std::invalid_argument("topk_peaks: k out of range");
  std::vector<size_t> order(total);
  for (size_t i = 0; i < total; ++i) order[i] = i;
  auto better = [&](size_t a, size_t b) {
    if (heatmap[a] != heatmap[b]) return heatmap[a] > heatmap[b];
    return a < b;  // flat index order == (class, row, col) ascending
  };
  if (static_cast<size_t>(k) < total) {
    std::nth_element(order.begin(), order.begin() + k, order.end(), better);
    order.resize(k);
  }
  std::sort(order.begin(), order.end(), better);
  std::vector<Peak> peaks;
  peaks.reserve(order.size());
  const size_t plane = static_cast<size_t>(height) * width;
  for (size_t idx : order) {
    Peak p;
    p.class_id = static_cast<int>(idx / plane);
    const size_t rem = idx % plane;
    p.row = static_cast<int>(rem / width);
    p.col = static_cast<int>(rem % width);
    p.score = heatmap[idx];
    peaks.push_back(p);
  }
  return peaks;
}

// Decoded detections for one frame, kept sorted by descending score.
struct DetectionSet {
  std::string frame_id;
  std::vector<Box3D> boxes;

  void sort_by_score() {
    std::stable_sort(boxes.begin(), boxes.end(), [](const Box3D& a, const Box3D& b) {
      return a.score.value_or(0.0) > b.score.value_or(0.0);
    });
  }
};

// Rescoring and NMS parameters; the defaults are the published WOD values.
struct RescoreParams {
  std::vector<double> alpha_per_class{0.68, 0.71, 0.65};
  std::vector<double> nms_iou_per_class{0.8, 0.55, 0.55};
  int pre_nms_top_k = 500;
  double score_floor = 0.0;

  void validate(int num_classes) const {
    if (static_cast<int>(alpha_per_class.size()) != num_classes ||
        static_cast<int>(nms_iou_per_class.size()) != num_classes)
      throw std::invalid_argument("RescoreParams: per-class vectors must have length K");
    for (double a : alpha_per_class)
      if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("RescoreParams: alpha outside [0,1]");
    for (double t : nms_iou_per_class)
      if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("RescoreParams: NMS threshold outside [0,1]");
    if (pre_nms_top_k < 1) throw std::invalid_argument("RescoreParams: pre_nms_top_k must be >= 1");
  }
};

// Assemble boxes from peaks and dense maps. Yaw comes from
// atan2(sin channel, cos channel); the IoU channel is mapped back to [0, 1]
// by the inverse of the target transform. Peaks with non-finite map values
// are dropped; peaks below score_floor are dropped.
inline DetectionSet assemble_boxes(std::span<const Peak> peaks, const HeadMaps& maps,
                                   const GridConfig& cfg, int stride, std::string frame_id = {},
                                   double score_floor = 0.0) {
  DetectionSet out;
  out.frame_id = std::move(frame_id);
  const size_t plane = maps.plane();
  for (const Peak& p : peaks) {
    if (p.score < score_floor) continue;
    const size_t px = static_cast<size_t>(p.row) * maps.width + p.col;
    const double dx = maps.offset[px];
    const double dy = maps.offset[plane + px];
    const double gx = (static_cast<double>(p.col) + dx) * stride;
    const double gy = (static_cast<double>(p.row) + dy) * stride;
    const std::array<double, 3> w = grid_to_world({gx, gy, 0.0}, cfg);
    Box3D box;
    box.cx = w[0];
    box.cy = w[1];
    box.cz = maps.z[px];
    box.l = maps.size[px];
    box.w = maps.size[plane + px];
    box.h = maps.size[2 * plane + px];
    const double sin_y = maps.orientation[px];
    const double cos_y = maps.orientation[plane + px];
    box.yaw = normalize_yaw(std::atan2(sin_y, cos_y));
    box.class_id = p.class_id;
    box.score = p.score;
    box.iou_pred = iou_target_inverse(maps.iou[px]);
    const bool finite = std::isfinite(box.cx) && std::isfinite(box.cy) && std::isfinite(box.cz) &&
                        std::isfinite(box.l) && std::isfinite(box.w) && std::isfinite(box.h) &&
                        std::isfinite(box.yaw) && std::isfinite(p.score);
    if (!finite || !(box.l > 0.0) || !(box.w > 0.0) || !(box.h > 0.0)) continue;
    out.boxes.push_back(box);
  }
  out.sort_by_score();
  return out;
}

// IoU-aware rescoring: score <- score^(1-alpha) * iou^alpha with the
// detection's class alpha. std::pow(0, 0) == 1, which matches the intended
// edge behavior (alpha = 0 keeps the score, alpha = 1 returns the IoU).
inline DetectionSet rescore(DetectionSet dets, const RescoreParams& params) {
  for (Box3D& b : dets.boxes) {
    if (b.class_id < 0 || b.class_id >= static_cast<int>(params.alpha_per_class.size()))
      throw std::invalid_argument("rescore: class_id outside alpha table");
    const double alpha = params.alpha_per_class[b.class_id];
    const double score = std::clamp(b.score.value_or(0.0), 0.0, 1.0);
    const double iou = std::clamp(b.iou_pred.value_or(0.0), 0.0, 1.0);
    b.score = std::pow(score, 1.0 - alpha) * std::pow(iou, alpha);
  }
  dets.sort_by_score();
  return dets;
}

// Greedy class-specific NMS on rotated BEV IoU: per class, keep the highest
// scoring box and drop same-class boxes overlapping it above the class
// threshold. Boxes of different classes never suppress each other.
inline DetectionSet class_nms(DetectionSet dets, const RescoreParams& params) {
  dets.sort_by_score();
  if (params.score_floor > 0.0) {
    std::erase_if(dets.boxes,
                  [&](const Box3D& b) { return b.score.value_or(0.0) < params.score_floor; });
  }
  if (params.pre_nms_top_k > 0 &&
      static_cast<int>(dets.boxes.size()) > params.pre_nms_top_k) {
    dets.boxes.resize(params.pre_nms_top_k);
  }
  DetectionSet out;
  out.frame_id = dets.frame_id;
  std::vector<char> suppressed(dets.boxes.size(), 0);
  for (size_t i = 0; i < dets.boxes.size(); ++i) {
    if (suppressed[i]) continue;
    const Box3D& keep = dets.boxes[i];
    if (keep.class_id < 0 || keep.class_id >= static_cast<int>(params.nms_iou_per_class.size()))
      throw std::invalid_argument("class_nms: class_id outside threshold table");
    out.boxes.push_back(keep);
    const double thresh = params.nms_iou_per_class[keep.class_id];
    for (size_t j = i + 1; j < dets.boxes.size(); ++j) {
      if (suppressed[j] || dets.boxes[j].class_id != keep.class_id) continue;
      if (rotated_bev_iou(keep, dets.boxes[j]) > thresh) suppressed[j] = 1;
    }
  }
  return out;
}

enum class PostProcessOrder {
  kRescoreThenNms,  // default: NMS ranking benefits from the fused score
  kNmsThenRescore,
};

inline DetectionSet post_process(DetectionSet dets, const RescoreParams& params,
                                 PostProcessOrder order = PostProcessOrder::kRescoreThenNms) {
  if (order == PostProcessOrder::kRescoreThenNms) {
    return class_nms(rescore(std::move(dets), params), params);
  }
  return rescore(class_nms(std::move(dets), params), params);
}

}  // namespace lidet
