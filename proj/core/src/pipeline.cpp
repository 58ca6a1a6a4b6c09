#include "cubesort/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "cubesort/error.hpp"
#include "cubesort/rng.hpp"

namespace cubesort::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, std::string_view text) {
  ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- config parsing ------------------------------------------------------

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      config_error("unknown key '" + where + "." + item.key() + "'");
    }
  }
}

template <typename T>
void read_field(const json& obj, std::string_view key, const std::string& where, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string name = where + "." + std::string(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) config_error(name + " must be a boolean");
    out = it->template get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) config_error(name + " must be a string");
    out = it->template get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) config_error(name + " must be a number");
    out = it->template get<T>();
  } else {
    if (!it->is_number_unsigned()) config_error(name + " must be a non-negative integer");
    out = it->template get<T>();
  }
}

void read_proposals(const json& obj, const std::string& where, detect::ProposalConfig& p) {
  read_field(obj, "pre_nms_n", where, p.pre_nms_n);
  read_field(obj, "post_nms_n", where, p.post_nms_n);
  read_field(obj, "proposal_nms", where, p.nms_threshold);
}

void read_train(const json& obj, detect::TrainConfig& t, bool& seed_given) {
  const std::string w = "train";
  check_keys(obj, w,
             {"epochs", "iters_per_epoch", "learning_rate", "momentum", "seed", "rpn_positive_iou",
              "rpn_negative_iou", "rpn_positives_per_image", "rpn_negatives_per_image", "roi_batch",
              "roi_foreground_fraction", "roi_foreground_iou", "anchor_scales", "pre_nms_n", "post_nms_n",
              "proposal_nms"});
  read_field(obj, "epochs", w, t.epochs);
  read_field(obj, "iters_per_epoch", w, t.iters_per_epoch);
  read_field(obj, "learning_rate", w, t.sgd.learning_rate);
  read_field(obj, "momentum", w, t.sgd.momentum);
  seed_given = obj.contains("seed");
  read_field(obj, "seed", w, t.seed);
  read_field(obj, "rpn_positive_iou", w, t.rpn_positive_iou);
  read_field(obj, "rpn_negative_iou", w, t.rpn_negative_iou);
  read_field(obj, "rpn_positives_per_image", w, t.rpn_positives_per_image);
  read_field(obj, "rpn_negatives_per_image", w, t.rpn_negatives_per_image);
  read_field(obj, "roi_batch", w, t.roi_batch);
  read_field(obj, "roi_foreground_fraction", w, t.roi_foreground_fraction);
  read_field(obj, "roi_foreground_iou", w, t.roi_foreground_iou);
  read_proposals(obj, w, t.proposals);
  if (const auto it = obj.find("anchor_scales"); it != obj.end()) {
    if (!it->is_array()) config_error("train.anchor_scales must be an array");
    t.anchor_scales.clear();
    for (const json& s : *it) {
      if (!s.is_number()) config_error("train.anchor_scales entries must be numbers");
      t.anchor_scales.push_back(s.get<double>());
    }
  }
}

std::uint8_t byte_of(const json& v, const std::string& name) {
  if (!v.is_number_unsigned() || v.get<unsigned>() > 255) config_error(name + " must be an integer in [0, 255]");
  return static_cast<std::uint8_t>(v.get<unsigned>());
}

void read_window(const json& obj, std::string_view key, const std::string& where, std::uint8_t& lo, std::uint8_t& hi) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string name = where + "." + std::string(key);
  if (!it->is_array() || it->size() != 2) config_error(name + " must be [lo, hi]");
  lo = byte_of((*it)[0], name);
  hi = byte_of((*it)[1], name);
}

color::HsvRange read_range(const json& obj, std::size_t i) {
  const std::string w = "color_ranges[" + std::to_string(i) + "]";
  check_keys(obj, w, {"category", "h", "s", "v"});
  color::HsvRange r;
  if (!obj.contains("category")) config_error(w + ".category is required");
  read_field(obj, "category", w, r.category);
  read_window(obj, "h", w, r.h_lo, r.h_hi);
  read_window(obj, "s", w, r.s_lo, r.s_hi);
  read_window(obj, "v", w, r.v_lo, r.v_hi);
  return r;
}

void check_zone_reach(const arm::Vec3& p, double payload, const std::string& what) {
  try {
    arm::inverse_reach(p, payload);
    arm::inverse_reach({p.x, p.y, p.z + arm::kHoverHeight}, payload);
  } catch (const Error& e) {
    config_error(what + " is not reachable: " + e.what());
  }
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string stem_of(std::string_view filename) { return fs::path(std::string(filename)).stem().string(); }

}  // namespace

arm::Vec3 TableMapping::to_table(double u, double v) const noexcept {
  return {x_max - v * (x_max - x_min), y_max - u * (y_max - y_min), object_z};
}

void PipelineConfig::validate() const {
  if (data_dir.empty()) config_error("data_dir must be set");
  if (count == 0) config_error("count must be >= 1");
  if (!(ratio > 0.0 && ratio < 1.0)) config_error("ratio must lie in (0, 1)");
  train.validate();
  detect.validate();
  if (color_ranges.empty()) config_error("color_ranges must be non-empty");
  if (!(table.x_min < table.x_max && table.y_min < table.y_max)) config_error("table mapping is empty");
  if (!(cube_payload_grams >= 0.0)) config_error("cube_payload_grams must be >= 0");
  const auto zone = drop_zones.find(std::string(kDefect));
  if (zone == drop_zones.end()) config_error("drop_zones.defect is required");
  for (const auto& [category, z] : drop_zones) {
    if (category != kDefect && category != kIntact) config_error("drop zone for unknown class '" + category + "'");
    check_zone_reach(z.pose, cube_payload_grams, "drop zone '" + category + "'");
  }
  for (const double x : {table.x_min, table.x_max}) {
    for (const double y : {table.y_min, table.y_max}) {
      check_zone_reach({x, y, table.object_z}, cube_payload_grams, "table corner");
    }
  }
}

PipelineConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  const std::string w = "config";
  check_keys(root, w,
             {"data_dir", "weights", "out_dir", "count", "ratio", "seed", "train", "detect", "color_ranges",
              "drop_zones", "table", "cube_payload_grams", "sort_limit", "pipelined"});
  PipelineConfig c;
  read_field(root, "data_dir", w, c.data_dir);
  read_field(root, "weights", w, c.weights);
  read_field(root, "out_dir", w, c.out_dir);
  read_field(root, "count", w, c.count);
  read_field(root, "ratio", w, c.ratio);
  read_field(root, "seed", w, c.seed);
  read_field(root, "cube_payload_grams", w, c.cube_payload_grams);
  read_field(root, "sort_limit", w, c.sort_limit);
  read_field(root, "pipelined", w, c.pipelined);

  bool train_seed_given = false;
  if (const auto it = root.find("train"); it != root.end()) read_train(*it, c.train, train_seed_given);
  if (!train_seed_given) c.train.seed = c.seed;

  if (const auto it = root.find("detect"); it != root.end()) {
    check_keys(*it, "detect", {"score_threshold", "nms_threshold", "pre_nms_n", "post_nms_n", "proposal_nms"});
    read_field(*it, "score_threshold", "detect", c.detect.score_threshold);
    read_field(*it, "nms_threshold", "detect", c.detect.nms_threshold);
    read_proposals(*it, "detect", c.detect.proposals);
  }
  if (const auto it = root.find("color_ranges"); it != root.end()) {
    if (!it->is_array()) config_error("color_ranges must be an array");
    c.color_ranges.clear();
    for (std::size_t i = 0; i < it->size(); ++i) c.color_ranges.push_back(read_range((*it)[i], i));
  }
  if (const auto it = root.find("drop_zones"); it != root.end()) {
    if (!it->is_object()) config_error("drop_zones must be an object");
    c.drop_zones.clear();
    for (const auto& item : it->items()) {
      const std::string zw = "drop_zones." + item.key();
      check_keys(item.value(), zw, {"id", "x", "y", "z"});
      DropZone z;
      read_field(item.value(), "id", zw, z.id);
      read_field(item.value(), "x", zw, z.pose.x);
      read_field(item.value(), "y", zw, z.pose.y);
      read_field(item.value(), "z", zw, z.pose.z);
      c.drop_zones[item.key()] = z;
    }
  }
  if (const auto it = root.find("table"); it != root.end()) {
    check_keys(*it, "table", {"x_min", "x_max", "y_min", "y_max", "object_z"});
    read_field(*it, "x_min", "table", c.table.x_min);
    read_field(*it, "x_max", "table", c.table.x_max);
    read_field(*it, "y_min", "table", c.table.y_min);
    read_field(*it, "y_max", "table", c.table.y_max);
    read_field(*it, "object_z", "table", c.table.object_z);
  }
  c.validate();
  return c;
}

PipelineConfig load_config_file(const std::string& path) { return parse_config(read_text(path)); }

std::string config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["data_dir"] = c.data_dir;
  j["weights"] = c.weights;
  j["out_dir"] = c.out_dir;
  j["count"] = c.count;
  j["ratio"] = c.ratio;
  j["seed"] = c.seed;
  j["train"] = {{"epochs", c.train.epochs},
                {"iters_per_epoch", c.train.iters_per_epoch},
                {"learning_rate", c.train.sgd.learning_rate},
                {"momentum", c.train.sgd.momentum},
                {"seed", c.train.seed},
                {"rpn_positive_iou", c.train.rpn_positive_iou},
                {"rpn_negative_iou", c.train.rpn_negative_iou},
                {"rpn_positives_per_image", c.train.rpn_positives_per_image},
                {"rpn_negatives_per_image", c.train.rpn_negatives_per_image},
                {"roi_batch", c.train.roi_batch},
                {"roi_foreground_fraction", c.train.roi_foreground_fraction},
                {"roi_foreground_iou", c.train.roi_foreground_iou},
                {"anchor_scales", c.train.anchor_scales},
                {"pre_nms_n", c.train.proposals.pre_nms_n},
                {"post_nms_n", c.train.proposals.post_nms_n},
                {"proposal_nms", c.train.proposals.nms_threshold}};
  j["detect"] = {{"score_threshold", c.detect.score_threshold},
                 {"nms_threshold", c.detect.nms_threshold},
                 {"pre_nms_n", c.detect.proposals.pre_nms_n},
                 {"post_nms_n", c.detect.proposals.post_nms_n},
                 {"proposal_nms", c.detect.proposals.nms_threshold}};
  j["color_ranges"] = nlohmann::ordered_json::array();
  for (const auto& r : c.color_ranges) {
    j["color_ranges"].push_back({{"category", r.category},
                                 {"h", {r.h_lo, r.h_hi}},
                                 {"s", {r.s_lo, r.s_hi}},
                                 {"v", {r.v_lo, r.v_hi}}});
  }
  j["drop_zones"] = nlohmann::ordered_json::object();
  for (const auto& [category, z] : c.drop_zones) {
    j["drop_zones"][category] = {{"id", z.id}, {"x", z.pose.x}, {"y", z.pose.y}, {"z", z.pose.z}};
  }
  j["table"] = {{"x_min", c.table.x_min}, {"x_max", c.table.x_max}, {"y_min", c.table.y_min},
                {"y_max", c.table.y_max}, {"object_z", c.table.object_z}};
  j["cube_payload_grams"] = c.cube_payload_grams;
  j["sort_limit"] = c.sort_limit;
  j["pipelined"] = c.pipelined;
  return j.dump(2) + "\n";
}

// --- gen-data / xml2csv --------------------------------------------------

imaging::SceneSpec dataset_scene(std::uint64_t seed, std::size_t index) {
  Xoshiro256ss rng(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  imaging::SceneSpec spec;
  spec.seed = rng();
  imaging::CubeSpec cube;
  cube.color = static_cast<imaging::ColorCategory>(index % 4);
  cube.side = static_cast<int>(rng.between(60, 110));
  const int half = cube.side / 2;
  cube.center_x = static_cast<int>(rng.between(half + 20, static_cast<std::int64_t>(spec.canvas_width) - half - 20));
  cube.center_y = static_cast<int>(rng.between(half + 20, static_cast<std::int64_t>(spec.canvas_height) - half - 20));
  if ((seed + index) % 2 == 0) {
    imaging::DefectSpec d;
    d.kind = rng.below(2) ? imaging::DefectKind::Hole : imaging::DefectKind::Notch;
    d.fraction = rng.uniform(0.3, 0.5);
    d.corner = static_cast<int>(rng.below(4));
    cube.defect = d;
  }
  spec.cubes.push_back(cube);
  return spec;
}

GenDataResult cmd_gen_data(std::size_t count, std::uint64_t seed, const std::string& out_dir) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
  ensure_dir(out_dir);
  GenDataResult res;
  res.manifest.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const imaging::Scene scene = imaging::synth_scene(dataset_scene(seed, i));
    Annotation a = scene.annotations.front();
    const std::string stem = a.category + std::to_string(i);
    a.filename = stem + ".ppm";
    imaging::write_ppm_file((fs::path(out_dir) / a.filename).string(), scene.image);
    write_text(fs::path(out_dir) / (stem + ".xml"), data::annotation_to_xml(a));
    res.manifest.push_back(std::move(a));
  }
  write_text(fs::path(out_dir) / kManifestName, data::annotations_to_csv(res.manifest));
  return res;
}

std::size_t cmd_xml2csv(const std::string& xml_dir, const std::string& out_csv) {
  const std::vector<Annotation> rows = data::read_xml_directory(xml_dir);
  write_text(out_csv, data::annotations_to_csv(rows));
  return rows.size();
}

std::vector<Annotation> read_manifest(const std::string& data_dir) {
  return data::parse_csv(read_text(fs::path(data_dir) / kManifestName));
}

std::vector<detect::TrainingSample> load_samples(const std::string& data_dir,
                                                 const std::vector<Annotation>& annotations) {
  std::vector<detect::TrainingSample> out;
  out.reserve(annotations.size());
  for (const Annotation& a : annotations) {
    const imaging::ImageBuffer full = imaging::read_ppm_file((fs::path(data_dir) / a.filename).string());
    if (full.width() != static_cast<std::size_t>(a.width) || full.height() != static_cast<std::size_t>(a.height)) {
      throw Error(ErrorCode::InvalidBox, a.filename + ": annotation size does not match the image");
    }
    out.push_back({imaging::rescale_half(full), {data::scale_annotation(a)}});
  }
  return out;
}

// --- train / eval ----------------------------------------------------------

TrainSummary cmd_train(const PipelineConfig& config, const detect::EpochCallback& on_epoch) {
  config.validate();
  const std::vector<Annotation> manifest = read_manifest(config.data_dir);
  const data::DatasetSplit split = data::split_dataset(manifest, config.ratio, config.seed);
  if (split.train.empty()) throw Error(ErrorCode::EmptyDataset, "train side of the split is empty");
  const std::vector<detect::TrainingSample> samples = load_samples(config.data_dir, split.train);

  TrainSummary summary{detect::train(samples, config.train, on_epoch), samples.size()};
  ensure_dir(fs::path(config.weights).parent_path());
  summary.result.model.save(config.weights);
  write_text(fs::path(config.out_dir) / "loss_log.csv",
             detect::loss_log_csv(summary.result.loss_log, config.train.iters_per_epoch));
  return summary;
}

std::string split_description(double ratio, std::size_t n_train, std::size_t n_test) {
  const long train_pct = std::lround(ratio * 100.0);
  return std::to_string(train_pct) + "% training / " + std::to_string(100 - train_pct) + "% testing (train " +
         std::to_string(n_train) + ", test " + std::to_string(n_test) + ")";
}

namespace {

void write_eval_outputs(const EvalResult& res, const eval::ConfusionMatrix& cm, const std::string& description,
                        const std::string& out_dir) {
  write_text(fs::path(out_dir) / "eval_report.md", eval::report_markdown(cm, description));
  write_text(fs::path(out_dir) / "eval_summary.json", eval::summary_json(cm) + "\n");
  std::string csv = "filename,actual,predicted,score\n";
  for (const FramePrediction& p : res.predictions) {
    csv += p.filename + ',' + p.actual + ',' + p.predicted + ',' + fmt("%.6f", p.score) + '\n';
  }
  write_text(fs::path(out_dir) / "eval_predictions.csv", csv);
}

}  // namespace

EvalResult cmd_eval(const PipelineConfig& config) {
  config.validate();
  const detect::DetectorModel model = detect::DetectorModel::load(config.weights);
  const std::vector<Annotation> manifest = read_manifest(config.data_dir);
  const data::DatasetSplit split = data::split_dataset(manifest, config.ratio, config.seed);
  if (split.test.empty()) throw Error(ErrorCode::EmptyDataset, "test side of the split is empty");

  EvalResult res;
  for (const Annotation& a : split.test) {
    const imaging::ImageBuffer frame =
        imaging::rescale_half(imaging::read_ppm_file((fs::path(config.data_dir) / a.filename).string()));
    double score = 0.0;
    const std::string verdict = detect::frame_verdict(detect::detect(frame, model, config.detect), &score);
    eval::accumulate(res.cm, verdict, a.category);
    res.predictions.push_back({a.filename, a.category, verdict, score});
  }
  const std::string description = split_description(config.ratio, split.train.size(), split.test.size());
  res.report = eval::report(res.cm, description);
  write_eval_outputs(res, res.cm, description, config.out_dir);
  return res;
}

EvalResult cmd_eval_cells(const eval::ConfusionMatrix& cm, const PipelineConfig& config) {
  EvalResult res;
  res.cm = cm;
  res.report = eval::report(cm, "supplied cells");
  write_eval_outputs(res, cm, "supplied cells", config.out_dir);
  return res;
}

// --- detect ------------------------------------------------------------------

DetectResult detect_frame(const imaging::ImageBuffer& frame, const detect::DetectorModel& model,
                          const detect::DetectConfig& config, std::string_view filename) {
  const imaging::ImageBuffer half = imaging::rescale_half(frame);
  DetectResult res;
  res.annotated = frame;
  res.csv = std::string(kDetectCsvHeader);
  for (detect::Detection d : detect::detect(half, model, config)) {
    d.box = {d.box.xmin * 2.0, d.box.ymin * 2.0, d.box.xmax * 2.0, d.box.ymax * 2.0};
    res.annotated = imaging::draw_rect(res.annotated, d.box, imaging::kAnnotationGreen, 2);
    res.csv += std::string(filename) + ',' + d.category + ',' + fmt("%.6f", d.score) + ',' + fmt("%.2f", d.box.xmin) +
               ',' + fmt("%.2f", d.box.ymin) + ',' + fmt("%.2f", d.box.xmax) + ',' + fmt("%.2f", d.box.ymax) + '\n';
    res.detections.push_back(d);
  }
  return res;
}

DetectResult cmd_detect(const std::string& image_path, const PipelineConfig& config) {
  config.detect.validate();
  const detect::DetectorModel model = detect::DetectorModel::load(config.weights);
  const imaging::ImageBuffer frame = imaging::read_ppm_file(image_path);
  const std::string name = fs::path(image_path).filename().string();
  DetectResult res = detect_frame(frame, model, config.detect, name);
  const std::string stem = stem_of(name);
  ensure_dir(config.out_dir);
  imaging::write_ppm_file((fs::path(config.out_dir) / (stem + "_annotated.ppm")).string(), res.annotated);
  write_text(fs::path(config.out_dir) / (stem + "_detections.csv"), res.csv);
  return res;
}

// --- sort --------------------------------------------------------------------

namespace {

struct Captured {
  std::size_t index = 0;
  std::string filename;
  imaging::ImageBuffer frame;  // halved
  std::vector<detect::Detection> detections;
  std::exception_ptr error;
};

template <typename T>
class Channel {
 public:
  void push(T item) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(item));
    }
    cv_.notify_one();
  }
  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  bool closed_ = false;
};

bool at_home(const arm::ArmState& s) {
  const arm::ArmState home = arm::home_state();
  for (std::size_t m = 0; m < arm::kMotorCount; ++m) {
    if (std::abs(s.joints[m] - home.joints[m]) > 0.1) return false;
  }
  return !s.any_relay_on();
}

class Sorter {
 public:
  explicit Sorter(const PipelineConfig& config) : config_(config), zone_(config.drop_zones.at(std::string(kDefect))) {}

  SortRow actuate(const Captured& c) {
    SortRow row;
    row.filename = c.filename;
    row.verdict = detect::frame_verdict(c.detections, &row.score);
    if (row.verdict != kDefect) {
      row.action = "leave";
      return row;
    }
    const detect::Detection* best = nullptr;
    for (const detect::Detection& d : c.detections) {
      if (d.category == kDefect && (!best || d.score > best->score)) best = &d;
    }
    const double u = best->box.center_x() / static_cast<double>(c.frame.width());
    const double v = best->box.center_y() / static_cast<double>(c.frame.height());
    const arm::Vec3 pose = config_.table.to_table(std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0));
    const auto id = static_cast<arm::ObjectId>(c.index);
    const arm::PickDropPlan plan = arm::plan_pick_drop(pose, config_.cube_payload_grams, zone_.pose, id, zone_.id);
    const arm::ExecutionResult run =
        arm::execute(plan, {arm::WorldObject{id, pose, config_.cube_payload_grams}});
    if (!run.ok()) throw Error(*run.error, c.filename + ": " + run.diagnostic);
    write_text(fs::path(config_.out_dir) / "plans" / (stem_of(c.filename) + "_plan.csv"), arm::plan_to_csv(plan));

    row.plan_frames = plan.frames.size();
    row.plan_completed = !run.arm.held_object && at_home(run.arm) &&
                         run.arm.joint(arm::MotorId::Gripper) >= 1.0 - 1e-9 &&
                         arm::distance(run.world.front().pose, zone_.pose) <= arm::kGraspRadius;
    row.action = row.plan_completed ? "pick_drop:zone" + std::to_string(zone_.id) : "pick_drop_incomplete";
    return row;
  }

 private:
  const PipelineConfig& config_;
  DropZone zone_;
};

}  // namespace

std::string sort_log_csv(const std::vector<SortRow>& rows) {
  std::string out(kSortLogHeader);
  for (const SortRow& r : rows) out += r.filename + ',' + r.verdict + ',' + fmt("%.4f", r.score) + ',' + r.action + '\n';
  return out;
}

SortResult cmd_sort(const PipelineConfig& config) {
  config.validate();
  const detect::DetectorModel model = detect::DetectorModel::load(config.weights);
  std::vector<Annotation> frames = read_manifest(config.data_dir);
  if (config.sort_limit > 0 && frames.size() > config.sort_limit) frames.resize(config.sort_limit);

  const auto capture = [&](std::size_t i) {
    Captured c;
    c.index = i;
    c.filename = frames[i].filename;
    c.frame = imaging::rescale_half(imaging::read_ppm_file((fs::path(config.data_dir) / c.filename).string()));
    return c;
  };
  const auto run_detect = [&](Captured& c) { c.detections = detect::detect(c.frame, model, config.detect); };

  Sorter sorter(config);
  SortResult res;
  if (!config.pipelined) {
    for (std::size_t i = 0; i < frames.size(); ++i) {
      Captured c = capture(i);
      run_detect(c);
      res.rows.push_back(sorter.actuate(c));
    }
  } else {
    Channel<Captured> captured;
    Channel<Captured> detected;
    std::thread capture_thread([&] {
      for (std::size_t i = 0; i < frames.size(); ++i) {
        try {
          captured.push(capture(i));
        } catch (...) {
          Captured c;
          c.index = i;
          c.error = std::current_exception();
          captured.push(std::move(c));
          break;
        }
      }
      captured.close();
    });
    std::thread detect_thread([&] {
      while (auto c = captured.pop()) {
        if (!c->error) {
          try {
            run_detect(*c);
          } catch (...) {
            c->error = std::current_exception();
          }
        }
        detected.push(std::move(*c));
      }
      detected.close();
    });
    std::exception_ptr failure;
    while (auto c = detected.pop()) {
      if (failure) continue;  // drain so the producers can finish
      try {
        if (c->error) std::rethrow_exception(c->error);
        res.rows.push_back(sorter.actuate(*c));
      } catch (...) {
        failure = std::current_exception();
      }
    }
    capture_thread.join();
    detect_thread.join();
    if (failure) std::rethrow_exception(failure);
  }
  res.log_csv = sort_log_csv(res.rows);
  write_text(fs::path(config.out_dir) / "sort_log.csv", res.log_csv);
  return res;
}

}  // namespace cubesort::pipeline
