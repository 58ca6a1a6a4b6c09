// cubesort: synthetic data, detector training, evaluation and arm sorting.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cubesort/error.hpp"
#include "cubesort/pipeline.hpp"

using namespace cubesort;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> ratio;
  std::optional<std::string> weights;
  std::optional<std::string> out;
  std::optional<std::string> data;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON pipeline config");
  cmd->add_option("--seed", o.seed, "Seed for generation, split and training");
  cmd->add_option("--ratio", o.ratio, "Train fraction of the split");
  cmd->add_option("--weights", o.weights, "Weights file");
  cmd->add_option("--data", o.data, "Dataset directory");
}

pipeline::PipelineConfig resolve(const Overrides& o) {
  pipeline::PipelineConfig c = o.config_path.empty() ? pipeline::PipelineConfig{} : pipeline::load_config_file(o.config_path);
  if (o.seed) {
    c.seed = *o.seed;
    c.train.seed = *o.seed;
  }
  if (o.ratio) c.ratio = *o.ratio;
  if (o.weights) c.weights = *o.weights;
  if (o.data) c.data_dir = *o.data;
  if (o.out) c.out_dir = *o.out;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cube sorting pipeline: gen-data, xml2csv, train, eval, detect, sort"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen-data", "Render a synthetic cube dataset");
  add_common(gen, o);
  std::optional<std::size_t> count;
  gen->add_option("--count", count, "Number of images");
  gen->add_option("--out", o.out, "Output directory (defaults to the data directory)");

  auto* x2c = app.add_subcommand("xml2csv", "Convert a directory of XML annotations to CSV");
  std::string xml_dir;
  std::string csv_out;
  x2c->add_option("xml_dir", xml_dir, "Directory of *.xml files")->required();
  x2c->add_option("--out", csv_out, "Output CSV")->required();

  auto* train = app.add_subcommand("train", "Train the detector on the train side of the split");
  add_common(train, o);
  train->add_option("--out", o.out, "Directory for the loss log");

  auto* ev = app.add_subcommand("eval", "Confusion matrix on the test side of the split");
  add_common(ev, o);
  ev->add_option("--out", o.out, "Directory for the report files");
  std::vector<std::uint64_t> cells;
  ev->add_option("--from-cells", cells, "Report for given cells: tp fp fn tn")->expected(4);

  auto* det = app.add_subcommand("detect", "Detect cubes in one PPM frame");
  add_common(det, o);
  std::string image;
  det->add_option("image", image, "Input PPM")->required();
  det->add_option("--out", o.out, "Directory for the annotated frame and CSV");

  auto* sort = app.add_subcommand("sort", "Detect, decide and run the simulated arm per frame");
  add_common(sort, o);
  sort->add_option("--out", o.out, "Directory for the sort log and plans");
  bool pipelined = false;
  sort->add_flag("--pipelined", pipelined, "Run capture, detect and actuate on separate threads");
  std::optional<std::size_t> limit;
  sort->add_option("--limit", limit, "Only the first N manifest frames");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*x2c) {
      const std::size_t n = pipeline::cmd_xml2csv(xml_dir, csv_out);
      std::printf("wrote %zu rows to %s\n", n, csv_out.c_str());
      return 0;
    }
    pipeline::PipelineConfig config = resolve(o);
    if (*gen) {
      if (count) config.count = *count;
      const std::string dir = o.out ? *o.out : config.data_dir;
      config.validate();
      const auto res = pipeline::cmd_gen_data(config.count, config.seed, dir);
      std::printf("wrote %zu frames to %s\n", res.manifest.size(), dir.c_str());
    } else if (*train) {
      const auto summary = pipeline::cmd_train(config, [](std::size_t epoch, double loss) {
        std::printf("epoch %zu mean loss %.6f\n", epoch + 1, loss);
        std::fflush(stdout);
      });
      std::printf("trained on %zu frames, weights in %s\n", summary.train_images, config.weights.c_str());
    } else if (*ev) {
      const auto res = cells.empty() ? pipeline::cmd_eval(config)
                                     : pipeline::cmd_eval_cells({cells[0], cells[1], cells[2], cells[3]}, config);
      std::cout << res.report;
    } else if (*det) {
      const auto res = pipeline::cmd_detect(image, config);
      std::cout << res.csv;
    } else if (*sort) {
      if (pipelined) config.pipelined = true;
      if (limit) config.sort_limit = *limit;
      std::cout << pipeline::cmd_sort(config).log_csv;
    }
  } catch (const Error& e) {
    std::cerr << "cubesort: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cubesort: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
