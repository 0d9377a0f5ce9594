#pragma once
// Pipeline configuration: one JSON document aggregating the grid, rescoring,
// loss, augmentation, TTA and evaluation settings, plus named presets seeded
// from the published model-variant tables. Presets only pin values the
// tables actually state; anything else keeps library defaults or must be
// given explicitly (the nuScenes preset carries no alpha/NMS/eval vectors).

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lidet/augment.hpp"
#include "lidet/decode.hpp"
#include "lidet/eval.hpp"
#include "lidet/losses.hpp"
#include "lidet/tta.hpp"
#include "lidet/voxel.hpp"

namespace lidet {

struct PipelineConfig {
  std::string preset;
  GridConfig grid;
  int stride = 8;
  RescoreParams rescore;
  LossWeights loss_weights;
  AugmentConfig augment;
  TtaGrid tta;
  EvalConfig eval;

  // Cross-field checks. Per-class vectors may be empty (meaning "not set");
  // operations that need them reject empty vectors at use time.
  void validate() const {
    grid.validate();
    augment.validate();
    pseudo_image_shape(grid, stride);  // throws unless dims divide the stride
    auto check_k = [&](size_t n, const char* what) {
      if (n != 0 && n != static_cast<size_t>(grid.num_classes))
        throw std::invalid_argument(std::string("PipelineConfig: ") + what +
                                    " must have one entry per class");
    };
    check_k(rescore.alpha_per_class.size(), "alpha_per_class");
    check_k(rescore.nms_iou_per_class.size(), "nms_iou_per_class");
    check_k(eval.iou_thresh_per_class.size(), "eval.iou_thresh_per_class");
    if (!rescore.alpha_per_class.empty()) rescore.validate(grid.num_classes);
  }
};

inline std::vector<std::string> preset_names() { return {"afdetv2-lite", "afdetv2", "nuscenes"}; }

inline PipelineConfig preset_config(const std::string& name) {
  PipelineConfig cfg;
  cfg.preset = name;
  if (name == "afdetv2-lite") {
    cfg.grid.range_min = {-75.2, -75.2, -2.0};
    cfg.grid.range_max = {75.2, 75.2, 4.0};
    cfg.grid.voxel_size = {0.1, 0.1, 0.15};
    cfg.grid.max_points_per_voxel = 5;
    cfg.grid.max_voxels = 0;  // unlimited at inference; 250000 was the training cap
    cfg.grid.num_classes = 3;
    cfg.grid.max_objects = 500;
  } else if (name == "afdetv2") {
    // Inference-range configuration of the finetuned variant.
    cfg.grid.range_min = {-80.0, -76.16, -2.0};
    cfg.grid.range_max = {80.0, 76.16, 4.0};
    cfg.grid.voxel_size = {0.1, 0.08, 0.15};
    cfg.grid.max_points_per_voxel = 5;
    cfg.grid.max_voxels = 0;
    cfg.grid.num_classes = 3;
    cfg.grid.max_objects = 500;
  } else if (name == "nuscenes") {
    cfg.grid.range_min = {-54.0, -54.0, -5.0};
    cfg.grid.range_max = {54.0, 54.0, 3.0};
    cfg.grid.voxel_size = {0.075, 0.075, 0.2};
    cfg.grid.max_points_per_voxel = 10;
    cfg.grid.max_voxels = 160000;
    cfg.grid.num_classes = 10;
    cfg.grid.max_objects = 500;
    cfg.rescore.alpha_per_class.clear();
    cfg.rescore.nms_iou_per_class.clear();
    cfg.eval.iou_thresh_per_class.clear();
    cfg.augment.samples_per_class.clear();
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::json to_json(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["preset"] = cfg.preset;
  j["grid"] = {{"range_min", cfg.grid.range_min},
               {"range_max", cfg.grid.range_max},
               {"voxel_size", cfg.grid.voxel_size},
               {"max_points_per_voxel", cfg.grid.max_points_per_voxel},
               {"max_voxels", cfg.grid.max_voxels},
               {"num_classes", cfg.grid.num_classes},
               {"max_objects", cfg.grid.max_objects}};
  j["stride"] = cfg.stride;
  j["rescore"] = {{"alpha_per_class", cfg.rescore.alpha_per_class},
                  {"nms_iou_per_class", cfg.rescore.nms_iou_per_class},
                  {"pre_nms_top_k", cfg.rescore.pre_nms_top_k},
                  {"score_floor", cfg.rescore.score_floor}};
  j["loss_weights"] = {{"off", cfg.loss_weights.off}, {"z", cfg.loss_weights.z},
                       {"size", cfg.loss_weights.size}, {"ori", cfg.loss_weights.ori},
                       {"iou", cfg.loss_weights.iou},  {"kps", cfg.loss_weights.kps}};
  j["augment"] = {{"samples_per_class", cfg.augment.samples_per_class},
                  {"flip_prob", cfg.augment.flip_prob},
                  {"rotation_range", cfg.augment.rotation_range},
                  {"scale_range", cfg.augment.scale_range},
                  {"translation_range", cfg.augment.translation_range},
                  {"instance_rotation_range", cfg.augment.instance_rotation_range},
                  {"instance_location_sigma", cfg.augment.instance_location_sigma},
                  {"flip_along_x_negates_x", cfg.augment.flip_along_x_negates_x}};
  j["tta"] = {{"yaw_deg", cfg.tta.yaw_deg}, {"scales", cfg.tta.scales},
              {"z_shifts", cfg.tta.z_shifts}};
  j["eval"] = {{"iou_thresh_per_class", cfg.eval.iou_thresh_per_class},
               {"exact_area", cfg.eval.exact_area}};
  return j;
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  if (j.contains("preset") && !j.at("preset").get<std::string>().empty()) {
    cfg = preset_config(j.at("preset").get<std::string>());
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.contains("range_min")) cfg.grid.range_min = g.at("range_min");
    if (g.contains("range_max")) cfg.grid.range_max = g.at("range_max");
    if (g.contains("voxel_size")) cfg.grid.voxel_size = g.at("voxel_size");
    if (g.contains("max_points_per_voxel")) cfg.grid.max_points_per_voxel = g.at("max_points_per_voxel");
    if (g.contains("max_voxels")) cfg.grid.max_voxels = g.at("max_voxels");
    if (g.contains("num_classes")) cfg.grid.num_classes = g.at("num_classes");
    if (g.contains("max_objects")) cfg.grid.max_objects = g.at("max_objects");
  }
  if (j.contains("stride")) cfg.stride = j.at("stride");
  if (j.contains("rescore")) {
    const auto& r = j.at("rescore");
    if (r.contains("alpha_per_class"))
      cfg.rescore.alpha_per_class = r.at("alpha_per_class").get<std::vector<double>>();
    if (r.contains("nms_iou_per_class"))
      cfg.rescore.nms_iou_per_class = r.at("nms_iou_per_class").get<std::vector<double>>();
    if (r.contains("pre_nms_top_k")) cfg.rescore.pre_nms_top_k = r.at("pre_nms_top_k");
    if (r.contains("score_floor")) cfg.rescore.score_floor = r.at("score_floor");
  }
  if (j.contains("loss_weights")) {
    const auto& w = j.at("loss_weights");
    if (w.contains("off")) cfg.loss_weights.off = w.at("off");
    if (w.contains("z")) cfg.loss_weights.z = w.at("z");
    if (w.contains("size")) cfg.loss_weights.size = w.at("size");
    if (w.contains("ori")) cfg.loss_weights.ori = w.at("ori");
    if (w.contains("iou")) cfg.loss_weights.iou = w.at("iou");
    if (w.contains("kps")) cfg.loss_weights.kps = w.at("kps");
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    if (a.contains("samples_per_class"))
      cfg.augment.samples_per_class = a.at("samples_per_class").get<std::vector<int>>();
    if (a.contains("flip_prob")) cfg.augment.flip_prob = a.at("flip_prob");
    if (a.contains("rotation_range")) cfg.augment.rotation_range = a.at("rotation_range");
    if (a.contains("scale_range")) cfg.augment.scale_range = a.at("scale_range");
    if (a.contains("translation_range")) cfg.augment.translation_range = a.at("translation_range");
    if (a.contains("instance_rotation_range"))
      cfg.augment.instance_rotation_range = a.at("instance_rotation_range");
    if (a.contains("instance_location_sigma"))
      cfg.augment.instance_location_sigma = a.at("instance_location_sigma");
    if (a.contains("flip_along_x_negates_x"))
      cfg.augment.flip_along_x_negates_x = a.at("flip_along_x_negates_x");
  }
  if (j.contains("tta")) {
    const auto& t = j.at("tta");
    if (t.contains("yaw_deg")) cfg.tta.yaw_deg = t.at("yaw_deg").get<std::vector<double>>();
    if (t.contains("scales")) cfg.tta.scales = t.at("scales").get<std::vector<double>>();
    if (t.contains("z_shifts")) cfg.tta.z_shifts = t.at("z_shifts").get<std::vector<double>>();
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    if (e.contains("iou_thresh_per_class"))
      cfg.eval.iou_thresh_per_class = e.at("iou_thresh_per_class").get<std::vector<double>>();
    if (e.contains("exact_area")) cfg.eval.exact_area = e.at("exact_area");
  }
  cfg.validate();
  return cfg;
}

}  // namespace lidet
