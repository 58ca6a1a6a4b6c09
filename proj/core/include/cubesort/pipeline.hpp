#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cubesort/annotation.hpp"
#include "cubesort/armsim.hpp"
#include "cubesort/colordetect.hpp"
#include "cubesort/datakit.hpp"
#include "cubesort/detector/detector.hpp"
#include "cubesort/eval.hpp"
#include "cubesort/imaging.hpp"

namespace cubesort::pipeline {

struct DropZone {
  int id = 0;
  arm::Vec3 pose;
};

/// Table rectangle (inches, arm frame) that the camera frame maps onto.
/// Image top maps to x_max, image left to y_max.
struct TableMapping {
  double x_min = 3.0;
  double x_max = 6.0;
  double y_min = -2.5;
  double y_max = 2.5;
  double object_z = 0.5;

  arm::Vec3 to_table(double u, double v) const noexcept;  // u, v in [0, 1]
};

struct PipelineConfig {
  std::string data_dir = "data";
  std::string weights = "model.csnn";
  std::string out_dir = "out";
  std::size_t count = 400;
  double ratio = 0.8;
  std::uint64_t seed = 7;
  detect::TrainConfig train;
  detect::DetectConfig detect;
  std::vector<color::HsvRange> color_ranges = color::default_ranges();
  std::map<std::string, DropZone> drop_zones{{std::string(kDefect), DropZone{0, {0.0, 5.5, 0.5}}}};
  TableMapping table;
  double cube_payload_grams = 30.0;
  std::size_t sort_limit = 0;  // 0 = every manifest entry
  bool pipelined = false;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Unknown keys and wrong types throw InvalidConfig. `train.seed` follows
/// `seed` unless given explicitly.
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config_file(const std::string& path);
std::string config_to_json(const PipelineConfig& config);

inline constexpr std::string_view kManifestName = "annotations.csv";
inline constexpr std::string_view kDetectCsvHeader = "filename,class,score,xmin,ymin,xmax,ymax\n";
inline constexpr std::string_view kSortLogHeader = "filename,verdict,score,action\n";

/// Scene i of a dataset: defect iff (seed + i) is even, color i mod 4.
imaging::SceneSpec dataset_scene(std::uint64_t seed, std::size_t index);

struct GenDataResult {
  std::vector<Annotation> manifest;
};

/// Writes `<class><i>.ppm`, `<class><i>.xml` and annotations.csv into out_dir.
/// Throws InvalidArgument for count 0 and IoError.
GenDataResult cmd_gen_data(std::size_t count, std::uint64_t seed, const std::string& out_dir);

/// Every *.xml under xml_dir (sorted by name) into one CSV. Returns the row count.
std::size_t cmd_xml2csv(const std::string& xml_dir, const std::string& out_csv);

std::vector<Annotation> read_manifest(const std::string& data_dir);

/// Loads, halves and relabels the listed frames.
std::vector<detect::TrainingSample> load_samples(const std::string& data_dir,
                                                 const std::vector<Annotation>& annotations);

struct TrainSummary {
  detect::TrainResult result;
  std::size_t train_images = 0;
};

/// Trains on the train side of split(ratio, seed); writes the weights file
/// and <out_dir>/loss_log.csv.
TrainSummary cmd_train(const PipelineConfig& config, const detect::EpochCallback& on_epoch = {});

struct FramePrediction {
  std::string filename;
  std::string actual;
  std::string predicted;
  double score = 0.0;
};

struct EvalResult {
  eval::ConfusionMatrix cm;
  std::string report;
  std::vector<FramePrediction> predictions;
};

std::string split_description(double ratio, std::size_t n_train, std::size_t n_test);

/// Frame-level verdicts on the test side of the split. Writes
/// eval_report.md, eval_summary.json and eval_predictions.csv into out_dir.
EvalResult cmd_eval(const PipelineConfig& config);

/// Report for externally supplied cells; writes the same files as cmd_eval.
EvalResult cmd_eval_cells(const eval::ConfusionMatrix& cm, const PipelineConfig& config);

struct DetectResult {
  imaging::ImageBuffer annotated;
  std::vector<detect::Detection> detections;  // input-image coordinates
  std::string csv;
};

/// Detects on the halved frame and reports boxes in input coordinates.
DetectResult detect_frame(const imaging::ImageBuffer& frame, const detect::DetectorModel& model,
                          const detect::DetectConfig& config, std::string_view filename);

/// Writes <out_dir>/<stem>_annotated.ppm and <out_dir>/<stem>_detections.csv.
DetectResult cmd_detect(const std::string& image_path, const PipelineConfig& config);

struct SortRow {
  std::string filename;
  std::string verdict;
  double score = 0.0;
  std::string action;
  std::size_t plan_frames = 0;
  bool plan_completed = false;
};

struct SortResult {
  std::vector<SortRow> rows;
  std::string log_csv;
};

/// Detect -> decide -> simulate for every manifest frame, in manifest order.
/// Defect frames get a pick-drop plan to the defect zone; intact frames are
/// left. With `pipelined` the stages run on separate threads; output is the
/// same. Writes <out_dir>/sort_log.csv and one plan CSV per picked frame.
SortResult cmd_sort(const PipelineConfig& config);

std::string sort_log_csv(const std::vector<SortRow>& rows);

}  // namespace cubesort::pipeline
