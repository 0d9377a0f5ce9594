// lidet command-line front end. Every subcommand is a thin wrapper over one
// library operation; given identical inputs and seeds the outputs are
// byte-identical regardless of --threads. Exit codes: 0 success, 2 validation
// error, 1 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lidet/lidet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string preset;
  std::string config_path;
  uint64_t seed = 0;
  int threads = 1;
};

void add_common(CLI::App* sub, CommonOpts& opts, bool with_seed = true) {
  sub->add_option("--preset", opts.preset, "named preset (afdetv2-lite, afdetv2, nuscenes)");
  sub->add_option("--config", opts.config_path, "pipeline config JSON file");
  if (with_seed) sub->add_option("--seed", opts.seed, "RNG seed");
  sub->add_option("--threads", opts.threads, "worker threads for batch subcommands")
      ->check(CLI::PositiveNumber);
}

lidet::PipelineConfig resolve_config(const CommonOpts& opts, bool required = true) {
  if (!opts.config_path.empty()) {
    return lidet::config_from_json(lidet::load_json(opts.config_path));
  }
  if (!opts.preset.empty()) {
    return lidet::preset_config(opts.preset);
  }
  if (required) {
    throw std::invalid_argument("either --preset or --config is required");
  }
  return lidet::preset_config("afdetv2-lite");
}

std::vector<double> parse_alpha_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t pos = 0;
    const double v = std::stod(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad alpha value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("--alphas list is empty");
  return out;
}

// Per-class parameter tables sized to cover the classes present in the data
// when only a scalar was given on the command line.
lidet::RescoreParams scalar_params(double alpha, double nms_iou, int num_classes) {
  lidet::RescoreParams p;
  p.alpha_per_class.assign(num_classes, alpha);
  p.nms_iou_per_class.assign(num_classes, nms_iou);
  return p;
}

int max_class_id(const std::vector<lidet::DetectionSet>& sets) {
  int m = 0;
  for (const auto& s : sets)
    for (const auto& b : s.boxes) m = std::max(m, b.class_id);
  return m;
}

void run_plan_shapes(const CommonOpts& opts, int stride_override) {
  lidet::PipelineConfig cfg = resolve_config(opts);
  const int stride = stride_override > 0 ? stride_override : cfg.stride;
  const auto dims = lidet::grid_dims(cfg.grid);
  const auto shape = lidet::pseudo_image_shape(cfg.grid, stride);
  std::printf("preset: %s\n", cfg.preset.empty() ? "(custom)" : cfg.preset.c_str());
  std::printf("grid: %d x %d x %d\n", dims[0], dims[1], dims[2]);
  std::printf("stride: %d\n", stride);
  std::printf("pseudo-image: %d x %d\n", shape[0], shape[1]);
  std::printf("z-slabs: %d\n", shape[2]);
}

void run_simulate(const CommonOpts& opts, const std::string& spec_path, const std::string& out_dir,
                  int num_scenes) {
  const json spec_json = lidet::load_json(spec_path);
  lidet::SceneSpec spec = lidet::scene_spec_from_json(spec_json);
  if (spec_json.contains("num_scenes")) num_scenes = spec_json.at("num_scenes").get<int>();
  if (num_scenes < 1) throw std::invalid_argument("num_scenes must be >= 1");
  const uint64_t seed = opts.seed != 0 ? opts.seed : spec.seed;
  std::vector<lidet::Frame> frames(num_scenes);
  lidet::parallel_for(num_scenes, opts.threads, [&](int64_t i) {
    lidet::Rng rng(lidet::split_seed(seed, static_cast<uint64_t>(i)));
    char id[16];
    std::snprintf(id, sizeof(id), "%06lld", static_cast<long long>(i));
    frames[i] = lidet::generate_scene(spec, rng, id);
  });
  lidet::save_frames(out_dir, frames);
  std::fprintf(stderr, "simulate: wrote %d frames to %s\n", num_scenes, out_dir.c_str());
}

void run_encode(const CommonOpts& opts, const std::string& frames_dir, const std::string& out_dir) {
  lidet::PipelineConfig cfg = resolve_config(opts);
  const std::vector<lidet::Frame> frames = lidet::load_frames(frames_dir);
  fs::create_directories(out_dir);
  lidet::parallel_for(static_cast<int64_t>(frames.size()), opts.threads, [&](int64_t i) {
    const lidet::Frame& f = frames[i];
    std::vector<lidet::Box3D> boxes;
    boxes.reserve(f.labels.size());
    for (const lidet::GroundTruth& gt : f.labels) boxes.push_back(gt.box);
    const lidet::TargetMaps maps = lidet::encode_targets(boxes, cfg.grid, cfg.stride);
    lidet::save_target_maps(fs::path(out_dir) / (f.id + ".targets"), maps);
  });
  std::fprintf(stderr, "encode: wrote %zu target files to %s\n", frames.size(), out_dir.c_str());
}

void run_decode(const CommonOpts& opts, const std::string& targets_dir, const std::string& out_path,
                int top_k, double score_floor) {
  lidet::PipelineConfig cfg = resolve_config(opts);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(targets_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".targets")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw lidet::IoError("no .targets files in " + targets_dir);
  std::vector<std::vector<lidet::BoxRecord>> per_frame(files.size());
  lidet::parallel_for(static_cast<int64_t>(files.size()), opts.threads, [&](int64_t i) {
    const lidet::TargetMaps t = lidet::load_target_maps(files[i]);
    const lidet::HeadMaps maps = lidet::to_head_maps(t);
    const int k = std::min<int64_t>(top_k > 0 ? top_k : cfg.grid.max_objects,
                                    static_cast<int64_t>(t.num_classes) * t.height * t.width);
    const auto peaks = lidet::topk_peaks(maps.heatmap, t.num_classes, t.height, t.width,
                                         static_cast<int>(k));
    const lidet::DetectionSet dets = lidet::assemble_boxes(peaks, maps, cfg.grid, cfg.stride,
                                                           files[i].stem().string(), score_floor);
    per_frame[i] = lidet::detections_to_records(dets);
  });
  std::vector<lidet::BoxRecord> all;
  for (auto& recs : per_frame) all.insert(all.end(), recs.begin(), recs.end());
  lidet::save_box_records(out_path, all);
  std::fprintf(stderr, "decode: wrote detections for %zu frames to %s\n", files.size(),
               out_path.c_str());
}

void run_rescore(const CommonOpts& opts, const std::string& in_path, const std::string& out_path,
                 std::optional<double> alpha) {
  std::vector<lidet::DetectionSet> sets = lidet::group_detections(lidet::load_box_records(in_path));
  lidet::RescoreParams params;
  if (alpha) {
    if (!(*alpha >= 0.0 && *alpha <= 1.0))
      throw std::invalid_argument("--alpha must be in [0, 1]");
    params = scalar_params(*alpha, 0.5, max_class_id(sets) + 1);
  } else {
    lidet::PipelineConfig cfg = resolve_config(opts);
    if (cfg.rescore.alpha_per_class.empty())
      throw std::invalid_argument("config carries no alpha values; pass --alpha");
    params = cfg.rescore;
  }
  std::vector<lidet::BoxRecord> out;
  for (auto& set : sets) {
    const lidet::DetectionSet scored = lidet::rescore(std::move(set), params);
    const auto recs = lidet::detections_to_records(scored);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  lidet::save_box_records(out_path, out);
}

void run_nms(const CommonOpts& opts, const std::string& in_path, const std::string& out_path,
             std::optional<double> iou, int pre_top_k) {
  std::vector<lidet::DetectionSet> sets = lidet::group_detections(lidet::load_box_records(in_path));
  lidet::RescoreParams params;
  if (iou) {
    if (!(*iou >= 0.0 && *iou <= 1.0)) throw std::invalid_argument("--iou must be in [0, 1]");
    params = scalar_params(0.0, *iou, max_class_id(sets) + 1);
  } else {
    lidet::PipelineConfig cfg = resolve_config(opts);
    if (cfg.rescore.nms_iou_per_class.empty())
      throw std::invalid_argument("config carries no NMS thresholds; pass --iou");
    params = cfg.rescore;
  }
  if (pre_top_k > 0) params.pre_nms_top_k = pre_top_k;
  std::vector<lidet::BoxRecord> out;
  for (auto& set : sets) {
    const lidet::DetectionSet kept = lidet::class_nms(std::move(set), params);
    const auto recs = lidet::detections_to_records(kept);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  lidet::save_box_records(out_path, out);
}

void run_fuse(const std::vector<std::string>& inputs, const std::string& out_path, double fuse_iou,
              const std::string& mode) {
  if (inputs.empty()) throw std::invalid_argument("--inputs requires at least one file");
  const lidet::FuseMode fuse_mode = mode == "mean" ? lidet::FuseMode::kUnweightedMean
                                                   : lidet::FuseMode::kScoreWeighted;
  // One detection set per input file per frame; frames ordered by id.
  std::map<std::string, std::vector<lidet::DetectionSet>> by_frame;
  for (const std::string& path : inputs) {
    for (auto& set : lidet::group_detections(lidet::load_box_records(path))) {
      by_frame[set.frame_id].push_back(std::move(set));
    }
  }
  std::vector<lidet::BoxRecord> out;
  for (auto& [id, sets] : by_frame) {
    const lidet::DetectionSet fused = lidet::fuse_detections(sets, fuse_iou, fuse_mode);
    const auto recs = lidet::detections_to_records(fused);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  lidet::save_box_records(out_path, out);
}

void run_augment(const CommonOpts& opts, const std::string& frames_dir, const std::string& out_dir,
                 const std::string& gt_db_dir, bool build_db) {
  lidet::PipelineConfig cfg = resolve_config(opts, /*required=*/false);
  std::vector<lidet::Frame> frames = lidet::load_frames(frames_dir);
  int num_classes = cfg.grid.num_classes;
  for (const auto& f : frames)
    for (const auto& gt : f.labels) num_classes = std::max(num_classes, gt.box.class_id + 1);

  if (build_db) {
    if (gt_db_dir.empty()) throw std::invalid_argument("--build-gt-db requires --gt-db <dir>");
    const lidet::GtDatabase db = lidet::build_gt_database(frames, num_classes);
    lidet::save_gt_database(gt_db_dir, db);
    std::fprintf(stderr, "augment: built database with %zu entries at %s\n", db.total_entries(),
                 gt_db_dir.c_str());
    return;
  }

  lidet::GtDatabase db;
  const bool sample = !gt_db_dir.empty();
  if (sample) db = lidet::load_gt_database(gt_db_dir);
  lidet::parallel_for(static_cast<int64_t>(frames.size()), opts.threads, [&](int64_t i) {
    lidet::Rng rng(lidet::split_seed(opts.seed, static_cast<uint64_t>(i)));
    if (sample) lidet::sample_gt(db, frames[i], cfg.augment, rng);
    lidet::global_augment(frames[i], cfg.augment, rng);
    lidet::instance_augment(frames[i], cfg.augment, rng);
  });
  lidet::save_frames(out_dir, frames);
  std::fprintf(stderr, "augment: wrote %zu frames to %s\n", frames.size(), out_dir.c_str());
}

void run_ablate(const CommonOpts& opts, const std::string& frames_dir, const std::string& alphas_csv,
                const std::string& noise_path, const std::string& out_path) {
  lidet::PipelineConfig cfg = resolve_config(opts, /*required=*/false);
  const std::vector<lidet::Frame> frames = lidet::load_frames(frames_dir);
  if (frames.empty()) throw std::invalid_argument("no frames found in " + frames_dir);
  const std::vector<double> alphas = parse_alpha_list(alphas_csv);
  const lidet::NoiseSpec noise = lidet::noise_spec_from_json(lidet::load_json(noise_path));
  int num_classes = cfg.grid.num_classes;
  for (const auto& f : frames)
    for (const auto& gt : f.labels) num_classes = std::max(num_classes, gt.box.class_id + 1);
  lidet::RescoreParams base = cfg.rescore;
  if (static_cast<int>(base.nms_iou_per_class.size()) != num_classes)
    throw std::invalid_argument("config NMS thresholds do not cover the classes in the data");
  lidet::EvalConfig eval_cfg = cfg.eval;
  if (static_cast<int>(eval_cfg.iou_thresh_per_class.size()) != num_classes)
    throw std::invalid_argument("config eval thresholds do not cover the classes in the data");

  const auto rows = lidet::ablate_alpha(frames, alphas, noise, base, eval_cfg, num_classes,
                                        opts.seed, opts.threads);
  auto out = std::ofstream(out_path);
  if (!out) throw lidet::IoError("cannot open " + out_path + " for writing");
  out << "alpha,class,ap_l1,aph_l1,ap_l2,aph_l2\n";
  char buf[64];
  auto fmt = [&buf](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    std::snprintf(buf, sizeof(buf), "%.9f", *v);
    return buf;
  };
  for (const lidet::AblationRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.4f", row.alpha);
    const std::string alpha_str = buf;
    for (int cls = 0; cls < num_classes; ++cls) {
      const auto& pc = row.report.per_class[cls];
      out << alpha_str << ',' << cls << ',' << fmt(pc[0].ap) << ',' << fmt(pc[0].aph) << ','
          << fmt(pc[1].ap) << ',' << fmt(pc[1].aph) << '\n';
    }
    out << alpha_str << ",ALL," << fmt(row.report.all[0].ap) << ',' << fmt(row.report.all[0].aph)
        << ',' << fmt(row.report.all[1].ap) << ',' << fmt(row.report.all[1].aph) << '\n';
  }
  if (!out) throw lidet::IoError("write failed: " + out_path);
}

void run_eval(const CommonOpts& opts, const std::string& dets_path, const std::string& gt_path,
              const std::string& out_path, const std::string& pr_csv_path) {
  lidet::PipelineConfig cfg = resolve_config(opts, /*required=*/false);
  const auto det_records = lidet::load_box_records(dets_path);
  const auto gt_records = lidet::load_box_records(gt_path);
  std::map<std::string, lidet::EvalInput> frames;
  int num_classes = cfg.grid.num_classes;
  for (const auto& rec : gt_records) {
    auto& f = frames[rec.frame_id];
    f.frame_id = rec.frame_id;
    // Unstated point counts keep the box in both difficulty pools.
    f.labels.push_back({rec.box, rec.num_points >= 0 ? rec.num_points : 100, rec.annotated_l2});
    num_classes = std::max(num_classes, rec.box.class_id + 1);
  }
  for (const auto& rec : det_records) {
    auto& f = frames[rec.frame_id];
    f.frame_id = rec.frame_id;
    f.detections.push_back(rec.box);
    num_classes = std::max(num_classes, rec.box.class_id + 1);
  }
  lidet::EvalConfig eval_cfg = cfg.eval;
  if (static_cast<int>(eval_cfg.iou_thresh_per_class.size()) != num_classes)
    throw std::invalid_argument(
        "eval IoU thresholds do not cover the classes in the data; pass --config");
  std::vector<lidet::EvalInput> inputs;
  inputs.reserve(frames.size());
  for (auto& [id, f] : frames) inputs.push_back(std::move(f));
  const lidet::EvalReport report = lidet::evaluate(inputs, num_classes, eval_cfg);
  auto out = std::ofstream(out_path);
  if (!out) throw lidet::IoError("cannot open " + out_path + " for writing");
  out << lidet::eval_report_to_json(report).dump(2) << '\n';
  if (!out) throw lidet::IoError("write failed: " + out_path);
  if (!pr_csv_path.empty()) lidet::save_pr_curves_csv(pr_csv_path, report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anchor-free 3D detection post-processing toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  int exit_code = 0;

  // plan-shapes
  auto* plan = app.add_subcommand("plan-shapes", "print grid and pseudo-image shapes");
  int stride_override = 0;
  add_common(plan, opts, false);
  plan->add_option("--stride", stride_override, "override feature-extractor stride");
  plan->callback([&] { run_plan_shapes(opts, stride_override); });

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate synthetic labeled frames");
  std::string spec_path, sim_out;
  int num_scenes = 10;
  add_common(sim, opts);
  sim->add_option("--spec", spec_path, "scene spec JSON")->required();
  sim->add_option("--out", sim_out, "output frames directory")->required();
  sim->add_option("--num-scenes", num_scenes, "scene count (spec file value wins)");
  sim->callback([&] { run_simulate(opts, spec_path, sim_out, num_scenes); });

  // encode
  auto* enc = app.add_subcommand("encode", "encode ground truth into target maps");
  std::string enc_frames, enc_out;
  add_common(enc, opts, false);
  enc->add_option("--frames", enc_frames, "frames directory")->required();
  enc->add_option("--out", enc_out, "output directory for .targets files")->required();
  enc->callback([&] { run_encode(opts, enc_frames, enc_out); });

  // decode
  auto* dec = app.add_subcommand("decode", "decode target maps into detections");
  std::string dec_targets, dec_out;
  int dec_top_k = 0;
  double dec_floor = 0.0;
  add_common(dec, opts, false);
  dec->add_option("--targets", dec_targets, "directory of .targets files")->required();
  dec->add_option("--out", dec_out, "output detections JSONL")->required();
  dec->add_option("--top-k", dec_top_k, "peaks per frame (default: max_objects)");
  dec->add_option("--score-floor", dec_floor, "drop peaks below this score");
  dec->callback([&] { run_decode(opts, dec_targets, dec_out, dec_top_k, dec_floor); });

  // rescore
  auto* res = app.add_subcommand("rescore", "apply IoU-aware rescoring");
  std::string res_in, res_out;
  double res_alpha = -1.0;
  add_common(res, opts, false);
  res->add_option("--in", res_in, "input detections JSONL")->required();
  res->add_option("--out", res_out, "output detections JSONL")->required();
  res->add_option("--alpha", res_alpha, "single alpha for all classes");
  res->callback([&] {
    run_rescore(opts, res_in, res_out,
                res_alpha >= 0.0 ? std::optional<double>(res_alpha) : std::nullopt);
  });

  // nms
  auto* nms = app.add_subcommand("nms", "class-specific rotated NMS");
  std::string nms_in, nms_out;
  double nms_iou = -1.0;
  int nms_top_k = 0;
  add_common(nms, opts, false);
  nms->add_option("--in", nms_in, "input detections JSONL")->required();
  nms->add_option("--out", nms_out, "output detections JSONL")->required();
  nms->add_option("--iou", nms_iou, "single IoU threshold for all classes");
  nms->add_option("--pre-top-k", nms_top_k, "keep at most this many boxes before NMS");
  nms->callback([&] {
    run_nms(opts, nms_in, nms_out, nms_iou >= 0.0 ? std::optional<double>(nms_iou) : std::nullopt,
            nms_top_k);
  });

  // fuse
  auto* fuse = app.add_subcommand("fuse", "fuse detection sets (TTA / model ensemble)");
  std::vector<std::string> fuse_inputs;
  std::string fuse_out, fuse_mode = "weighted";
  double fuse_iou = 0.55;
  fuse->add_option("--inputs", fuse_inputs, "detection JSONL files, one per pass")->required();
  fuse->add_option("--out", fuse_out, "output detections JSONL")->required();
  fuse->add_option("--fuse-iou", fuse_iou, "clustering IoU threshold");
  fuse->add_option("--mode", fuse_mode, "weighted|mean")
      ->check(CLI::IsMember({"weighted", "mean"}));
  fuse->callback([&] { run_fuse(fuse_inputs, fuse_out, fuse_iou, fuse_mode); });

  // augment
  auto* aug = app.add_subcommand("augment", "augment frames (GT sampling, global, instance)");
  std::string aug_frames, aug_out, aug_db;
  bool aug_build_db = false;
  add_common(aug, opts);
  aug->add_option("--frames", aug_frames, "frames directory")->required();
  aug->add_option("--out", aug_out, "output frames directory");
  aug->add_option("--gt-db", aug_db, "ground-truth sample database directory");
  aug->add_flag("--build-gt-db", aug_build_db, "build the database from --frames and exit");
  aug->callback([&] {
    if (!aug_build_db && aug_out.empty())
      throw CLI::ValidationError("--out is required unless --build-gt-db is given");
    run_augment(opts, aug_frames, aug_out, aug_db, aug_build_db);
  });

  // ablate
  auto* abl = app.add_subcommand("ablate", "alpha sweep over synthetic detections");
  std::string abl_frames, abl_alphas, abl_noise, abl_out;
  add_common(abl, opts);
  abl->add_option("--frames", abl_frames, "frames directory")->required();
  abl->add_option("--alphas", abl_alphas, "comma-separated alpha values")->required();
  abl->add_option("--noise", abl_noise, "noise spec JSON")->required();
  abl->add_option("--out", abl_out, "output CSV")->required();
  abl->callback([&] { run_ablate(opts, abl_frames, abl_alphas, abl_noise, abl_out); });

  // eval
  auto* ev = app.add_subcommand("eval", "AP/APH evaluation of detections against ground truth");
  std::string ev_dets, ev_gt, ev_out, ev_pr;
  add_common(ev, opts, false);
  ev->add_option("--dets", ev_dets, "detections JSONL")->required();
  ev->add_option("--gt", ev_gt, "ground-truth JSONL")->required();
  ev->add_option("--out", ev_out, "report JSON")->required();
  ev->add_option("--pr-csv", ev_pr, "optional PR-curve CSV dump");
  ev->callback([&] { run_eval(opts, ev_dets, ev_gt, ev_out, ev_pr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const lidet::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
