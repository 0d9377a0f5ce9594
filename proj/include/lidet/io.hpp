#pragma once
// File formats: point clouds (little-endian f32 binary and CSV), detection /
// ground-truth JSON lines, the TargetMaps binary container with its JSON
// debug dump, the ground-truth sample database directory, evaluation reports
// and PR-curve CSVs. Readers report malformed content with file:line (or
// byte offset for binary files); all writers are deterministic.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lidet/augment.hpp"
#include "lidet/decode.hpp"
#include "lidet/eval.hpp"
#include "lidet/frame.hpp"
#include "lidet/sim.hpp"
#include "lidet/targets.hpp"

namespace lidet {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v, const std::string& context) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError(context + ": truncated file");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Point clouds: records of (x, y, z, intensity) as little-endian f32, or CSV
// with header x,y,z,intensity.

inline void save_point_cloud_bin(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = detail::open_output(path, true);
  for (const CloudPoint& p : cloud.points) {
    const std::array<float, 4> rec{static_cast<float>(p.x), static_cast<float>(p.y),
                                   static_cast<float>(p.z), static_cast<float>(p.intensity)};
    out.write(reinterpret_cast<const char*>(rec.data()), sizeof(rec));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline PointCloud load_point_cloud_bin(const std::filesystem::path& path) {
  auto in = detail::open_input(path, true);
  in.seekg(0, std::ios::end);
  const std::streamoff bytes = in.tellg();
  in.seekg(0, std::ios::beg);
  if (bytes % 16 != 0)
    throw std::invalid_argument(path.string() + ": size " + std::to_string(bytes) +
                                " is not a multiple of the 16-byte record (offset " +
                                std::to_string(bytes - bytes % 16) + ")");
  PointCloud cloud;
  cloud.points.resize(static_cast<size_t>(bytes / 16));
  for (CloudPoint& p : cloud.points) {
    std::array<float, 4> rec;
    in.read(reinterpret_cast<char*>(rec.data()), sizeof(rec));
    if (!in) throw IoError(path.string() + ": truncated read");
    p = {rec[0], rec[1], rec[2], rec[3]};
  }
  return cloud;
}

inline void save_point_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = detail::open_output(path);
  out << "x,y,z,intensity\n";
  out.precision(17);
  for (const CloudPoint& p : cloud.points) {
    out << p.x << ',' << p.y << ',' << p.z << ',' << p.intensity << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline PointCloud load_point_cloud_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y,z", 0) != 0)
    throw std::invalid_argument(path.string() + ":1: expected header x,y,z,intensity");
  PointCloud cloud;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    CloudPoint p;
    char c1, c2, c3;
    std::istringstream ss(line);
    if (!(ss >> p.x >> c1 >> p.y >> c2 >> p.z >> c3 >> p.intensity) || c1 != ',' || c2 != ',' ||
        c3 != ',') {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed CSV record");
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Detection / ground-truth JSON lines. One object per line with fields
// frame_id, class, cx, cy, cz, l, w, h, yaw and, when present, score,
// iou_pred, num_points, l2.

struct BoxRecord {
  std::string frame_id;
  Box3D box;
  int num_points = -1;  // < 0 means absent
  bool annotated_l2 = false;
};

inline nlohmann::json box_record_to_json(const BoxRecord& rec) {
  nlohmann::json j;
  j["frame_id"] = rec.frame_id;
  j["class"] = rec.box.class_id;
  j["cx"] = rec.box.cx;
  j["cy"] = rec.box.cy;
  j["cz"] = rec.box.cz;
  j["l"] = rec.box.l;
  j["w"] = rec.box.w;
  j["h"] = rec.box.h;
  j["yaw"] = rec.box.yaw;
  if (rec.box.score) j["score"] = *rec.box.score;
  if (rec.box.iou_pred) j["iou_pred"] = *rec.box.iou_pred;
  if (rec.num_points >= 0) j["num_points"] = rec.num_points;
  if (rec.annotated_l2) j["l2"] = true;
  return j;
}

inline void save_box_records(const std::filesystem::path& path,
                             const std::vector<BoxRecord>& records) {
  auto out = detail::open_output(path);
  for (const BoxRecord& rec : records) out << box_record_to_json(rec).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<BoxRecord> load_box_records(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<BoxRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      BoxRecord rec;
      rec.frame_id = j.at("frame_id").get<std::string>();
      rec.box.class_id = j.at("class").get<int>();
      rec.box.cx = j.at("cx").get<double>();
      rec.box.cy = j.at("cy").get<double>();
      rec.box.cz = j.at("cz").get<double>();
      rec.box.l = j.at("l").get<double>();
      rec.box.w = j.at("w").get<double>();
      rec.box.h = j.at("h").get<double>();
      rec.box.yaw = j.at("yaw").get<double>();
      if (j.contains("score")) rec.box.score = j.at("score").get<double>();
      if (j.contains("iou_pred")) rec.box.iou_pred = j.at("iou_pred").get<double>();
      if (j.contains("num_points")) rec.num_points = j.at("num_points").get<int>();
      if (j.contains("l2")) rec.annotated_l2 = j.at("l2").get<bool>();
      records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

// Group detection records into per-frame sets, frames ordered by id.
inline std::vector<DetectionSet> group_detections(const std::vector<BoxRecord>& records) {
  std::map<std::string, DetectionSet> by_frame;
  for (const BoxRecord& rec : records) {
    DetectionSet& set = by_frame[rec.frame_id];
    set.frame_id = rec.frame_id;
    set.boxes.push_back(rec.box);
  }
  std::vector<DetectionSet> out;
  out.reserve(by_frame.size());
  for (auto& [id, set] : by_frame) {
    set.sort_by_score();
    out.push_back(std::move(set));
  }
  return out;
}

inline std::vector<BoxRecord> detections_to_records(const DetectionSet& set) {
  std::vector<BoxRecord> out;
  out.reserve(set.boxes.size());
  for (const Box3D& b : set.boxes) out.push_back({set.frame_id, b, -1, false});
  return out;
}

// ---------------------------------------------------------------------------
// Frames directory: <id>.bin (or <id>.csv) point clouds plus one gt.jsonl
// with every label. Frame ids are the sorted stem names of the cloud files.

inline std::vector<std::string> list_frame_ids(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".bin" || ext == ".csv") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::vector<Frame> load_frames(const std::filesystem::path& dir) {
  std::vector<Frame> frames;
  std::map<std::string, std::vector<GroundTruth>> labels;
  const auto gt_path = dir / "gt.jsonl";
  if (std::filesystem::exists(gt_path)) {
    for (const BoxRecord& rec : load_box_records(gt_path)) {
      labels[rec.frame_id].push_back(
          {rec.box, rec.num_points >= 0 ? rec.num_points : 0, rec.annotated_l2});
    }
  }
  for (const std::string& id : list_frame_ids(dir)) {
    Frame f;
    f.id = id;
    const auto bin = dir / (id + ".bin");
    f.cloud = std::filesystem::exists(bin) ? load_point_cloud_bin(bin)
                                           : load_point_cloud_csv(dir / (id + ".csv"));
    if (auto it = labels.find(id); it != labels.end()) f.labels = std::move(it->second);
    frames.push_back(std::move(f));
  }
  return frames;
}

inline void save_frames(const std::filesystem::path& dir, const std::vector<Frame>& frames) {
  std::filesystem::create_directories(dir);
  std::vector<BoxRecord> gt;
  for (const Frame& f : frames) {
    save_point_cloud_bin(dir / (f.id + ".bin"), f.cloud);
    for (const GroundTruth& g : f.labels) gt.push_back({f.id, g.box, g.num_points, g.annotated_l2});
  }
  save_box_records(dir / "gt.jsonl", gt);
}

// ---------------------------------------------------------------------------
// TargetMaps binary container: "LDTM" magic, version, (K, H, W, N) header,
// dense maps as f32 row-major, then the per-object arrays as f64/i64/u8.

inline void save_target_maps(const std::filesystem::path& path, const TargetMaps& t) {
  auto out = detail::open_output(path, true);
  out.write("LDTM", 4);
  detail::write_pod(out, uint32_t{1});
  detail::write_pod(out, static_cast<int32_t>(t.num_classes));
  detail::write_pod(out, static_cast<int32_t>(t.height));
  detail::write_pod(out, static_cast<int32_t>(t.width));
  detail::write_pod(out, static_cast<int32_t>(t.count()));
  auto write_f32 = [&](const std::vector<double>& v) {
    for (double x : v) detail::write_pod(out, static_cast<float>(x));
  };
  write_f32(t.heatmap);
  write_f32(t.keypoint_map);
  for (int64_t x : t.indices) detail::write_pod(out, x);
  for (int x : t.class_ids) detail::write_pod(out, static_cast<int32_t>(x));
  for (const auto& o : t.offset) {
    detail::write_pod(out, o[0]);
    detail::write_pod(out, o[1]);
  }
  for (double x : t.z) detail::write_pod(out, x);
  for (const auto& s : t.size) {
    detail::write_pod(out, s[0]);
    detail::write_pod(out, s[1]);
    detail::write_pod(out, s[2]);
  }
  for (const auto& o : t.orientation) {
    detail::write_pod(out, o[0]);
    detail::write_pod(out, o[1]);
  }
  for (double x : t.iou_target) detail::write_pod(out, x);
  for (uint8_t m : t.mask) detail::write_pod(out, m);
  if (!out) throw IoError("write failed: " + path.string());
}

inline TargetMaps load_target_maps(const std::filesystem::path& path) {
  auto in = detail::open_input(path, true);
  const std::string ctx = path.string();
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LDTM", 4) != 0)
    throw std::invalid_argument(ctx + ": bad magic at offset 0");
  uint32_t version;
  detail::read_pod(in, version, ctx);
  if (version != 1) throw std::invalid_argument(ctx + ": unsupported version");
  int32_t k, h, w, n;
  detail::read_pod(in, k, ctx);
  detail::read_pod(in, h, ctx);
  detail::read_pod(in, w, ctx);
  detail::read_pod(in, n, ctx);
  if (k < 1 || h < 1 || w < 1 || n < 0)
    throw std::invalid_argument(ctx + ": invalid header dimensions");
  TargetMaps t;
  t.num_classes = k;
  t.height = h;
  t.width = w;
  const size_t plane = static_cast<size_t>(k) * h * w;
  auto read_f32 = [&](std::vector<double>& v) {
    v.resize(plane);
    for (double& x : v) {
      float f;
      detail::read_pod(in, f, ctx);
      x = f;
    }
  };
  read_f32(t.heatmap);
  read_f32(t.keypoint_map);
  t.indices.resize(n);
  for (int64_t& x : t.indices) detail::read_pod(in, x, ctx);
  t.class_ids.resize(n);
  for (int& x : t.class_ids) {
    int32_t v;
    detail::read_pod(in, v, ctx);
    x = v;
  }
  t.offset.resize(n);
  for (auto& o : t.offset) {
    detail::read_pod(in, o[0], ctx);
    detail::read_pod(in, o[1], ctx);
  }
  t.z.resize(n);
  for (double& x : t.z) detail::read_pod(in, x, ctx);
  t.size.resize(n);
  for (auto& s : t.size) {
    detail::read_pod(in, s[0], ctx);
    detail::read_pod(in, s[1], ctx);
    detail::read_pod(in, s[2], ctx);
  }
  t.orientation.resize(n);
  for (auto& o : t.orientation) {
    detail::read_pod(in, o[0], ctx);
    detail::read_pod(in, o[1], ctx);
  }
  t.iou_target.resize(n);
  for (double& x : t.iou_target) detail::read_pod(in, x, ctx);
  t.mask.resize(n);
  for (uint8_t& m : t.mask) detail::read_pod(in, m, ctx);
  return t;
}

// Human-readable dump of the sparse targets (dense maps are summarized).
inline nlohmann::json target_maps_debug_json(const TargetMaps& t) {
  nlohmann::json j;
  j["num_classes"] = t.num_classes;
  j["height"] = t.height;
  j["width"] = t.width;
  j["num_objects"] = t.count();
  j["heatmap_max"] = t.heatmap.empty() ? 0.0 : *std::max_element(t.heatmap.begin(), t.heatmap.end());
  j["objects"] = nlohmann::json::array();
  for (int i = 0; i < t.count(); ++i) {
    j["objects"].push_back({{"index", t.indices[i]},
                            {"class", t.class_ids[i]},
                            {"offset", t.offset[i]},
                            {"z", t.z[i]},
                            {"size", t.size[i]},
                            {"orientation", t.orientation[i]},
                            {"iou_target", t.iou_target[i]},
                            {"mask", static_cast<int>(t.mask[i])}});
  }
  return j;
}

// ---------------------------------------------------------------------------
// Ground-truth sample database directory: index.json plus one binary point
// file per entry (box-local coordinates, same record format as clouds).

inline void save_gt_database(const std::filesystem::path& dir, const GtDatabase& db) {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["num_classes"] = db.per_class.size();
  index["classes"] = nlohmann::json::array();
  for (size_t cls = 0; cls < db.per_class.size(); ++cls) {
    nlohmann::json entries = nlohmann::json::array();
    for (size_t i = 0; i < db.per_class[cls].size(); ++i) {
      const GtDatabase::Entry& e = db.per_class[cls][i];
      char name[64];
      std::snprintf(name, sizeof(name), "c%02zu_%06zu.bin", cls, i);
      PointCloud pts;
      pts.points = e.local_points;
      save_point_cloud_bin(dir / name, pts);
      entries.push_back({{"points_file", name},
                         {"num_points", e.local_points.size()},
                         {"box",
                          {{"cx", e.box.cx}, {"cy", e.box.cy}, {"cz", e.box.cz},
                           {"l", e.box.l},   {"w", e.box.w},   {"h", e.box.h},
                           {"yaw", e.box.yaw}, {"class", e.box.class_id}}}});
    }
    index["classes"].push_back(std::move(entries));
  }
  auto out = detail::open_output(dir / "index.json");
  out << index.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + (dir / "index.json").string());
}

inline GtDatabase load_gt_database(const std::filesystem::path& dir) {
  auto in = detail::open_input(dir / "index.json");
  nlohmann::json index;
  try {
    in >> index;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument((dir / "index.json").string() + ": " + e.what());
  }
  GtDatabase db;
  db.per_class.resize(index.at("num_classes").get<size_t>());
  const auto& classes = index.at("classes");
  for (size_t cls = 0; cls < classes.size(); ++cls) {
    for (const auto& ej : classes[cls]) {
      GtDatabase::Entry e;
      const auto& bj = ej.at("box");
      e.box.cx = bj.at("cx");
      e.box.cy = bj.at("cy");
      e.box.cz = bj.at("cz");
      e.box.l = bj.at("l");
      e.box.w = bj.at("w");
      e.box.h = bj.at("h");
      e.box.yaw = bj.at("yaw");
      e.box.class_id = bj.at("class");
      e.local_points = load_point_cloud_bin(dir / ej.at("points_file").get<std::string>()).points;
      db.per_class[cls].push_back(std::move(e));
    }
  }
  return db;
}

// ---------------------------------------------------------------------------
// Simulator specs.

inline nlohmann::json scene_spec_to_json(const SceneSpec& spec) {
  nlohmann::json j;
  j["classes"] = nlohmann::json::array();
  for (const ClassGeometrySpec& c : spec.classes) {
    j["classes"].push_back({{"count", c.count_range},
                            {"length", c.length_range},
                            {"width", c.width_range},
                            {"height", c.height_range}});
  }
  j["points_per_object"] = spec.points_per_object;
  j["background_points"] = spec.background_points;
  j["area_half_extent"] = spec.area_half_extent;
  j["seed"] = spec.seed;
  return j;
}

inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  SceneSpec spec;
  if (j.contains("classes")) {
    spec.classes.clear();
    for (const auto& cj : j.at("classes")) {
      ClassGeometrySpec c;
      if (cj.contains("count")) c.count_range = cj.at("count");
      if (cj.contains("length")) c.length_range = cj.at("length");
      if (cj.contains("width")) c.width_range = cj.at("width");
      if (cj.contains("height")) c.height_range = cj.at("height");
      spec.classes.push_back(c);
    }
  }
  if (j.contains("points_per_object")) spec.points_per_object = j.at("points_per_object");
  if (j.contains("background_points")) spec.background_points = j.at("background_points");
  if (j.contains("area_half_extent")) spec.area_half_extent = j.at("area_half_extent");
  if (j.contains("seed")) spec.seed = j.at("seed").get<uint64_t>();
  spec.validate();
  return spec;
}

inline nlohmann::json noise_spec_to_json(const NoiseSpec& n) {
  return {{"center_sigma", n.center_sigma},     {"dim_sigma", n.dim_sigma},
          {"yaw_sigma", n.yaw_sigma},           {"score_iou_corr", n.score_iou_corr},
          {"fp_rate", n.fp_rate},               {"fn_rate", n.fn_rate},
          {"iou_head_sigma", n.iou_head_sigma}};
}

inline NoiseSpec noise_spec_from_json(const nlohmann::json& j) {
  NoiseSpec n;
  if (j.contains("center_sigma")) n.center_sigma = j.at("center_sigma");
  if (j.contains("dim_sigma")) n.dim_sigma = j.at("dim_sigma");
  if (j.contains("yaw_sigma")) n.yaw_sigma = j.at("yaw_sigma");
  if (j.contains("score_iou_corr")) n.score_iou_corr = j.at("score_iou_corr");
  if (j.contains("fp_rate")) n.fp_rate = j.at("fp_rate");
  if (j.contains("fn_rate")) n.fn_rate = j.at("fn_rate");
  if (j.contains("iou_head_sigma")) n.iou_head_sigma = j.at("iou_head_sigma");
  n.validate();
  return n;
}

// Parse a JSON document from a file, rewrapping parse errors with the path.
inline nlohmann::json load_json(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Evaluation report JSON and PR-curve CSV.

inline nlohmann::json eval_report_to_json(const EvalReport& report) {
  auto entry_json = [](const MetricEntry& e) {
    nlohmann::json j;
    j["ap"] = e.ap ? nlohmann::json(*e.ap) : nlohmann::json(nullptr);
    j["aph"] = e.aph ? nlohmann::json(*e.aph) : nlohmann::json(nullptr);
    j["gt"] = e.gt;
    j["tp"] = e.tp;
    j["fp"] = e.fp;
    return j;
  };
  nlohmann::json j;
  j["classes"] = nlohmann::json::array();
  for (size_t cls = 0; cls < report.per_class.size(); ++cls) {
    j["classes"].push_back({{"class", cls},
                            {"l1", entry_json(report.per_class[cls][0])},
                            {"l2", entry_json(report.per_class[cls][1])}});
  }
  j["all"] = {{"l1", entry_json(report.all[0])}, {"l2", entry_json(report.all[1])}};
  return j;
}

inline void save_pr_curves_csv(const std::filesystem::path& path, const EvalReport& report) {
  auto out = detail::open_output(path);
  out.precision(17);
  out << "class,level,score,recall,precision,recall_h,precision_h\n";
  for (size_t cls = 0; cls < report.pr_curves.size(); ++cls) {
    for (int lvl = 0; lvl < 2; ++lvl) {
      for (const PrPoint& p : report.pr_curves[cls][lvl]) {
        out << cls << ',' << (lvl == 0 ? "L1" : "L2") << ',' << p.score << ',' << p.recall << ','
            << p.precision << ',' << p.recall_h << ',' << p.precision_h << '\n';
      }
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace lidet
