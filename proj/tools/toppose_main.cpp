// toppose: command-line front end for the top-down pose post-processing
// pipeline.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toppose/annotations.hpp"
#include "toppose/eval.hpp"
#include "toppose/fixture.hpp"
#include "toppose/pipeline.hpp"
#include "toppose/report.hpp"

namespace {

using namespace toppose;

struct Options {
  PipelineConfig config;
  std::string annotations;
  int fixture_images = 0;
  std::uint64_t fixture_seed = FixtureOptions{}.seed;
  std::string boxes;
  std::string tensors_dir;
  bool oracle = false;
  std::string crop_size = "257x353";
  std::vector<double> kappas;
  std::string score_source = "rescore";
  std::string out_dir = "out";

  // nms / eval
  std::string detections;
  std::string out_file;

  // sweep
  std::string param = "oks-nms";
  std::vector<double> values{0.1, 0.3, 0.5, 0.7, 0.9};
  int seeds = 1;

  // synth
  std::vector<double> train_rescale;
};

void add_input_options(CLI::App* app, Options& o) {
  app->add_option("--annotations", o.annotations, "COCO keypoint annotation file");
  app->add_option("--fixture", o.fixture_images,
                  "use the built-in synthetic fixture with this many images");
  app->add_option("--fixture-seed", o.fixture_seed, "seed of the built-in fixture");
}

void add_kappa_option(CLI::App* app, Options& o) {
  app->add_option("--kappas", o.kappas, "17 per-keypoint OKS falloff constants")
      ->expected(kNumKeypoints)
      ->delimiter(',');
}

void add_pipeline_options(CLI::App* app, Options& o) {
  auto& c = o.config;
  add_input_options(app, o);
  app->add_option("--boxes", o.boxes, "person proposals (COCO bbox results)");
  app->add_option("--tensors-dir", o.tensors_dir, "directory of <image>_<box>_{heat|off}.tns");
  app->add_flag("--oracle", o.oracle, "synthesize tensors from ground truth");
  app->add_option("--noise-flip", c.noise.heatmap_flip_prob, "heatmap flip probability")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--noise-offset-sigma", c.noise.offset_sigma, "offset noise sigma (crop px)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--noise-box-jitter", c.noise.box_jitter, "box corner jitter (fraction)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--noise-duplicates", c.noise.duplicate_rate,
                  "expected duplicate boxes per image")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--seed", c.noise.seed, "random seed");
  app->add_option("--radius", c.radius, "disk radius R (crop px)")->capture_default_str();
  app->add_option("--crop-size", o.crop_size, "crop WIDTHxHEIGHT")->capture_default_str();
  app->add_option("--rescale", c.rescale, "box context rescale")->capture_default_str();
  app->add_option("--proposal-threshold", c.proposal_threshold,
                  "keep proposals scoring above this")
      ->capture_default_str();
  app->add_option("--iou-nms", c.iou_nms, "box IOU-NMS threshold")->capture_default_str();
  app->add_option("--oks-nms", c.oks_nms, "pose OKS-NMS threshold")->capture_default_str();
  app->add_option("--max-dets", c.max_dets, "detections per image for evaluation")
      ->capture_default_str();
  app->add_option("--score-source", o.score_source, "instance score: rescore | detector")
      ->check(CLI::IsMember({"rescore", "detector"}))
      ->capture_default_str();
  app->add_option("--threads", c.threads, "worker threads")->capture_default_str();
  app->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
  add_kappa_option(app, o);
}

AnnotationSet load_inputs(const Options& o) {
  if (!o.annotations.empty() && o.fixture_images > 0)
    throw StageError("input", "--annotations and --fixture are mutually exclusive");
  if (!o.annotations.empty()) {
    try {
      return load_annotations(o.annotations);
    } catch (const std::exception& e) {
      throw StageError("annotations", e.what());
    }
  }
  if (o.fixture_images > 0) {
    FixtureOptions f;
    f.num_images = o.fixture_images;
    f.seed = o.fixture_seed;
    return make_fixture(f);
  }
  throw StageError("input", "one of --annotations or --fixture is required");
}

void finalize_config(Options& o) {
  auto& c = o.config;
  int w = 0, h = 0;
  char x = 0;
  std::istringstream in(o.crop_size);
  if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || w <= 0 || h <= 0)
    throw StageError("config", "--crop-size must look like 257x353");
  c.crop_width = w;
  c.crop_height = h;
  if (!o.kappas.empty()) {
    if (o.kappas.size() != static_cast<std::size_t>(kNumKeypoints))
      throw StageError("config", "--kappas needs exactly 17 values");
    for (int k = 0; k < kNumKeypoints; ++k) c.kappas(k) = o.kappas[static_cast<std::size_t>(k)];
  }
  c.score_source = o.score_source == "detector" ? ScoreSource::Detector : ScoreSource::Rescore;
  if (!o.boxes.empty()) c.boxes_path = o.boxes;
  if (!o.tensors_dir.empty()) {
    if (o.oracle) throw StageError("config", "--oracle and --tensors-dir are mutually exclusive");
    c.tensors_dir = o.tensors_dir;
  }
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw StageError("output", "cannot write " + path.string());
  out << text;
}

int cmd_synth(Options& o) {
  finalize_config(o);
  const AnnotationSet gts = load_inputs(o);
  SynthOptions so;
  if (!o.train_rescale.empty()) {
    if (o.train_rescale.size() != 2) throw StageError("config", "--train-rescale needs lo,hi");
    so.train_rescale = std::make_pair(o.train_rescale[0], o.train_rescale[1]);
  }
  try {
    synthesize(o.config, gts, o.out_dir, so);
    if (o.fixture_images > 0) save_annotations(gts, std::filesystem::path(o.out_dir) / "annotations.json");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("synth", e.what());
  }
  std::cout << "wrote synthetic proposals and tensors to " << o.out_dir << "\n";
  return 0;
}

int cmd_decode(Options& o) {
  finalize_config(o);
  AnnotationSet gts;
  if (o.config.tensors_dir) {
    if (!o.config.boxes_path) throw StageError("config", "--tensors-dir requires --boxes");
    if (!o.annotations.empty() || o.fixture_images > 0) gts = load_inputs(o);
  } else {
    gts = load_inputs(o);
  }
  const auto proposals = [&] {
    try {
      return make_proposals(o.config, gts);
    } catch (const std::exception& e) {
      throw StageError("boxes", e.what());
    }
  }();
  auto dets = decode_proposals(o.config, gts, proposals);
  sort_detections(dets);
  const auto path = o.out_file.empty() ? std::filesystem::path(o.out_dir) / "detections.json"
                                       : std::filesystem::path(o.out_file);
  write_text(path, detections_to_json(dets));
  std::cout << "decoded " << dets.size() << " detections -> " << path.string() << "\n";
  return 0;
}

int cmd_nms(Options& o) {
  finalize_config(o);
  std::vector<PoseDetection> dets;
  try {
    dets = load_detections(o.detections);
  } catch (const std::exception& e) {
    throw StageError("detections", e.what());
  }
  const std::size_t before = dets.size();
  auto kept = suppress(std::move(dets), o.config.oks_nms, o.config.kappas);
  const auto path = o.out_file.empty() ? std::filesystem::path(o.out_dir) / "detections.json"
                                       : std::filesystem::path(o.out_file);
  write_text(path, detections_to_json(kept));
  std::cout << "kept " << kept.size() << " of " << before << " detections -> " << path.string()
            << "\n";
  return 0;
}

int cmd_eval(Options& o) {
  finalize_config(o);
  const AnnotationSet gts = load_inputs(o);
  std::vector<PoseDetection> dets;
  try {
    dets = load_detections(o.detections);
  } catch (const std::exception& e) {
    throw StageError("detections", e.what());
  }
  const EvalReport report = evaluate(dets, gts.annotations, o.config.eval_params());
  write_text(std::filesystem::path(o.out_dir) / "report.txt", format_report(report));
  write_text(std::filesystem::path(o.out_dir) / "report.csv", report_csv(report));
  std::cout << format_report(report);
  return 0;
}

int cmd_run(Options& o) {
  finalize_config(o);
  const AnnotationSet gts = load_inputs(o);
  const PipelineResult result = run_pipeline(o.config, gts);
  try {
    write_artifacts(result, o.out_dir);
  } catch (const std::exception& e) {
    throw StageError("output", e.what());
  }
  std::cout << format_report(result.report);
  return 0;
}

int cmd_fixture(Options& o) {
  FixtureOptions f;
  f.num_images = o.fixture_images;
  f.seed = o.fixture_seed;
  const AnnotationSet gts = make_fixture(f);
  const auto path = o.out_file.empty() ? std::filesystem::path(o.out_dir) / "annotations.json"
                                       : std::filesystem::path(o.out_file);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_annotations(gts, path);
  std::cout << "wrote " << gts.annotations.size() << " people in " << gts.images.size()
            << " images -> " << path.string() << "\n";
  return 0;
}

int cmd_sweep(Options& o) {
  finalize_config(o);
  const AnnotationSet gts = load_inputs(o);
  const auto rows = sweep(o.config, gts, o.param, o.values, o.seeds);
  const auto path = o.out_file.empty() ? std::filesystem::path(o.out_dir) / "sweep.csv"
                                       : std::filesystem::path(o.out_file);
  const std::string csv = sweep_csv(o.param, rows);
  write_text(path, csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-down multi-person pose post-processing: decode, NMS, evaluation"};
  app.require_subcommand(1);
  // INI/TOML file; options go under a section named after the subcommand.
  app.set_config("--config", "", "config file with [subcommand] sections of long option names");
  app.fallthrough();
  Options o;

  auto* synth = app.add_subcommand("synth", "emit oracle (optionally noisy) proposals and tensors");
  add_pipeline_options(synth, o);
  synth->add_option("--train-rescale", o.train_rescale,
                    "draw each crop's rescale uniformly from lo,hi")
      ->expected(2)
      ->delimiter(',');

  auto* decode = app.add_subcommand("decode", "tensors -> detections (no OKS-NMS)");
  add_pipeline_options(decode, o);
  decode->add_option("--out", o.out_file, "detections file (default <out-dir>/detections.json)");

  auto* nms = app.add_subcommand("nms", "detections -> OKS-NMS suppressed detections");
  nms->add_option("--detections", o.detections, "input detections")->required();
  nms->add_option("--oks-nms", o.config.oks_nms, "OKS-NMS threshold")->capture_default_str();
  nms->add_option("--out", o.out_file, "output file (default <out-dir>/detections.json)");
  nms->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
  add_kappa_option(nms, o);

  auto* eval = app.add_subcommand("eval", "detections + annotations -> AP/AR report");
  add_input_options(eval, o);
  eval->add_option("--detections", o.detections, "detections file")->required();
  eval->add_option("--max-dets", o.config.max_dets, "detections per image")->capture_default_str();
  eval->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
  add_kappa_option(eval, o);

  auto* run = app.add_subcommand("run", "end-to-end: proposals -> decode -> NMS -> evaluation");
  add_pipeline_options(run, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "AP as a function of one parameter -> CSV");
  add_pipeline_options(sweep_cmd, o);
  sweep_cmd->add_option("--param", o.param, "parameter to vary")->capture_default_str();
  sweep_cmd->add_option("--values", o.values, "comma-separated values")->delimiter(',');
  sweep_cmd->add_option("--seeds", o.seeds, "seeds averaged per value")->capture_default_str();
  sweep_cmd->add_option("--out", o.out_file, "CSV path (default <out-dir>/sweep.csv)");


  auto* fixture = app.add_subcommand("fixture", "write the synthetic fixture as COCO annotations");
  fixture->add_option("--images", o.fixture_images, "number of images")->required();
  fixture->add_option("--fixture-seed", o.fixture_seed, "fixture seed")->capture_default_str();
  fixture->add_option("--out", o.out_file, "output file (default <out-dir>/annotations.json)");
  fixture->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(o);
    if (*decode) return cmd_decode(o);
    if (*nms) return cmd_nms(o);
    if (*eval) return cmd_eval(o);
    if (*run) return cmd_run(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*fixture) return cmd_fixture(o);
  } catch (const StageError& e) {
    std::cerr << "toppose: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "toppose: [internal] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
