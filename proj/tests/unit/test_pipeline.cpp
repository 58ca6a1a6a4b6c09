#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cubesort/error.hpp"
#include "cubesort/pipeline.hpp"
#include "json.hpp"

using namespace cubesort;
using namespace cubesort::pipeline;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("cubesort_pipeline_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

PipelineConfig small_config(const fs::path& root, std::size_t count) {
  PipelineConfig c;
  c.data_dir = (root / "data").string();
  c.out_dir = (root / "out").string();
  c.weights = (root / "model.csnn").string();
  c.count = count;
  c.train.epochs = 1;
  c.train.iters_per_epoch = 4;
  return c;
}

}  // namespace

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(PipelineConfig{}.validate()); }

TEST(Config, ParseOverridesAndSeedFollow) {
  const auto c = parse_config(R"({"seed": 11, "ratio": 0.7, "train": {"epochs": 2}, "detect": {"score_threshold": 0.6}})");
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.train.seed, 11u);
  EXPECT_EQ(c.ratio, 0.7);
  EXPECT_EQ(c.train.epochs, 2u);
  EXPECT_EQ(c.detect.score_threshold, 0.6);
  const auto d = parse_config(R"({"seed": 11, "train": {"seed": 3}})");
  EXPECT_EQ(d.train.seed, 3u);
}

TEST(Config, RoundTripThroughJson) {
  PipelineConfig c;
  c.seed = 99;
  c.train.seed = 5;
  c.ratio = 0.9;
  c.drop_zones["intact"] = DropZone{1, {0.0, -5.5, 0.5}};
  const auto back = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, Errors) {
  EXPECT_EQ(code_of([] { parse_config("{"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { parse_config(R"({"bogus": 1})"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { parse_config(R"({"ratio": "high"})"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { parse_config(R"({"ratio": 1.5})"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { parse_config(R"({"train": {"epochs": 0}})"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { parse_config(R"({"drop_zones": {"defect": {"id": 0, "x": 30, "y": 0, "z": 0.5}}})"); }),
            ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { load_config_file("/nonexistent/cubesort.json"); }), ErrorCode::IoError);
}

TEST(Table, CornersMap) {
  const TableMapping t;
  const auto tl = t.to_table(0, 0);
  EXPECT_EQ(tl.x, t.x_max);
  EXPECT_EQ(tl.y, t.y_max);
  const auto br = t.to_table(1, 1);
  EXPECT_EQ(br.x, t.x_min);
  EXPECT_EQ(br.y, t.y_min);
  EXPECT_EQ(br.z, t.object_z);
}

TEST(Scenes, ParityAndColors) {
  for (std::size_t i = 0; i < 16; ++i) {
    const auto s = dataset_scene(7, i);
    ASSERT_EQ(s.cubes.size(), 1u);
    EXPECT_EQ(s.cubes[0].defect.has_value(), (7 + i) % 2 == 0);
    EXPECT_EQ(static_cast<std::size_t>(s.cubes[0].color), i % 4);
    EXPECT_NO_THROW(imaging::synth_scene(s));
  }
}

TEST(GenData, DeterministicWithManifest) {
  const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
  const auto ra = cmd_gen_data(6, 7, a.string());
  cmd_gen_data(6, 7, b.string());
  ASSERT_EQ(ra.manifest.size(), 6u);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 13u);
  EXPECT_EQ(read_manifest(a.string()), ra.manifest);
  EXPECT_EQ(ra.manifest[0].filename, "intact0.ppm");
  EXPECT_EQ(ra.manifest[1].filename, "defect1.ppm");
  EXPECT_EQ(code_of([&] { cmd_gen_data(0, 7, a.string()); }), ErrorCode::InvalidArgument);
}

TEST(GenData, SingleImageFollowsParity) {
  const fs::path d = fresh_dir("gen_one");
  EXPECT_EQ(cmd_gen_data(1, 8, d.string()).manifest[0].category, "defect");
  EXPECT_EQ(cmd_gen_data(1, 7, d.string()).manifest[0].category, "intact");
}

TEST(Xml2Csv, MatchesManifest) {
  const fs::path d = fresh_dir("x2c");
  const auto r = cmd_gen_data(5, 3, d.string());
  const fs::path out = d / "converted.csv";
  EXPECT_EQ(cmd_xml2csv(d.string(), out.string()), 5u);
  auto sorted = r.manifest;
  std::sort(sorted.begin(), sorted.end(), [](const Annotation& x, const Annotation& y) {
    return fs::path(x.filename).stem().string() + ".xml" < fs::path(y.filename).stem().string() + ".xml";
  });
  EXPECT_EQ(data::parse_csv(slurp(out)), sorted);
}

TEST(Samples, HalvedAndRelabelled) {
  const fs::path d = fresh_dir("samples");
  const auto r = cmd_gen_data(2, 7, d.string());
  const auto s = load_samples(d.string(), r.manifest);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].image.width(), 270u);
  EXPECT_EQ(s[0].image.height(), 305u);
  EXPECT_EQ(s[0].annotations[0], data::scale_annotation(r.manifest[0]));
}

TEST(Eval, CellsReport) {
  const fs::path d = fresh_dir("eval_cells");
  PipelineConfig c;
  c.out_dir = d.string();
  const auto r = cmd_eval_cells({43, 10, 6, 21}, c);
  EXPECT_NE(r.report.find("accuracy 80.00%"), std::string::npos);
  EXPECT_NE(r.report.find("precision 81.13%"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "eval_report.md"));
  const auto j = nlohmann::json::parse(slurp(d / "eval_summary.json"));
  EXPECT_EQ(j["tp"], 43);
}

TEST(Eval, SplitDescription) {
  EXPECT_EQ(split_description(0.8, 320, 80), "80% training / 20% testing (train 320, test 80)");
}

TEST(Detect, BlankImageUnchanged) {
  const fs::path d = fresh_dir("detect_blank");
  // Head biased hard towards background: nothing passes the score threshold.
  auto model = detect::DetectorModel::create(detect::default_anchor_scales(), 1);
  model.head_cls.bias[0] = 50.0f;
  const imaging::ImageBuffer blank(540, 610, imaging::kDefaultBackground);
  const auto r = detect_frame(blank, model, {}, "blank.ppm");
  EXPECT_TRUE(r.detections.empty());
  EXPECT_EQ(r.annotated, blank);
  EXPECT_EQ(r.csv, std::string(kDetectCsvHeader));

  model.save((d / "m.csnn").string());
  imaging::write_ppm_file((d / "blank.ppm").string(), blank);
  PipelineConfig c;
  c.weights = (d / "m.csnn").string();
  c.out_dir = (d / "out").string();
  cmd_detect((d / "blank.ppm").string(), c);
  EXPECT_EQ(imaging::read_ppm_file((d / "out" / "blank_annotated.ppm").string()), blank);
  EXPECT_EQ(slurp(d / "out" / "blank_detections.csv"), std::string(kDetectCsvHeader));
}

TEST(Detect, MissingInputsAreIoErrors) {
  PipelineConfig c;
  c.weights = "/nonexistent/m.csnn";
  EXPECT_EQ(code_of([&] { cmd_detect("/nonexistent/x.ppm", c); }), ErrorCode::IoError);
}

TEST(Sort, TenImagesSequentialAndPipelinedAgree) {
  const fs::path root = fresh_dir("sort");
  PipelineConfig c = small_config(root, 10);
  cmd_gen_data(10, c.seed, c.data_dir);
  cmd_train(c);
  ASSERT_TRUE(fs::exists(c.weights));
  ASSERT_TRUE(fs::exists(fs::path(c.out_dir) / "loss_log.csv"));
  c.detect.score_threshold = 0.0;  // untrained model: force the pick path

  const SortResult seq = cmd_sort(c);
  ASSERT_EQ(seq.rows.size(), 10u);
  EXPECT_EQ(std::count(seq.log_csv.begin(), seq.log_csv.end(), '\n'), 11);
  EXPECT_EQ(seq.log_csv.rfind(std::string(kSortLogHeader), 0), 0u);
  std::size_t picked = 0;
  for (const auto& row : seq.rows) {
    if (row.verdict == "defect") {
      ++picked;
      EXPECT_TRUE(row.plan_completed) << row.filename;
      EXPECT_EQ(row.action, "pick_drop:zone0");
      EXPECT_GT(row.plan_frames, 0u);
    } else {
      EXPECT_EQ(row.action, "leave");
    }
  }
  EXPECT_GT(picked, 0u);
  const std::string log_seq = slurp(fs::path(c.out_dir) / "sort_log.csv");
  EXPECT_EQ(log_seq, seq.log_csv);

  c.pipelined = true;
  const SortResult par = cmd_sort(c);
  EXPECT_EQ(par.log_csv, seq.log_csv);

  c.pipelined = false;
  c.sort_limit = 3;
  EXPECT_EQ(cmd_sort(c).rows.size(), 3u);
}

TEST(Sort, TrainIsDeterministic) {
  const fs::path a = fresh_dir("train_a"), b = fresh_dir("train_b");
  PipelineConfig ca = small_config(a, 6), cb = small_config(b, 6);
  cmd_gen_data(6, ca.seed, ca.data_dir);
  cmd_gen_data(6, cb.seed, cb.data_dir);
  cmd_train(ca);
  cmd_train(cb);
  EXPECT_EQ(slurp(ca.weights), slurp(cb.weights));
  EXPECT_EQ(slurp(fs::path(ca.out_dir) / "loss_log.csv"), slurp(fs::path(cb.out_dir) / "loss_log.csv"));
}
