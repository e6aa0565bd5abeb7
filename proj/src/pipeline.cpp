#include "toppose/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "toppose/decoder.hpp"
#include "toppose/nms.hpp"
#include "toppose/report.hpp"
#include "toppose/tensor_file.hpp"

namespace toppose {
namespace {

constexpr std::uint64_t kRescaleStream = 0x5CA1Eu;

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first failure
// (lowest index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::atomic<std::size_t> next{0};
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    work(next);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(workers, n); ++t) pool.emplace_back([&] { work(next); });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::uint64_t crop_stream(ImageId image_id, std::size_t box_index) {
  return derive_seed(static_cast<std::uint64_t>(image_id), {box_index});
}

CropTransformd crop_for(const PipelineConfig& config, const Boxd& box, double rescale) {
  return make_crop_transform(box, config.crop_width, config.crop_height, rescale);
}

// Per-thread scratch: crops are large and allocating them afresh for every
// proposal makes the allocator return and re-map memory each time.
const CropTensors<float>& oracle_crop(const PipelineConfig& config, const std::vector<Pose>& gts,
                                      const Boxd& box, const CropTransformd& transform,
                                      ImageId image_id, std::size_t box_index) {
  thread_local CropTensors<float> scratch;
  const int g = assign_ground_truth(box, gts);
  const Pose pose = g >= 0 ? gts[static_cast<std::size_t>(g)] : Pose{};
  oracle_tensors_into(pose, transform, config.radius, scratch);
  scratch = perturb(std::move(scratch), config.noise, crop_stream(image_id, box_index));
  return scratch;
}

CropTensors<float> load_crop(const PipelineConfig& config, ImageId image_id,
                             std::size_t box_index) {
  const auto& dir = *config.tensors_dir;
  const int idx = static_cast<int>(box_index);
  CropTensors<float> t{
      heatmaps_from_tensor(read_tensor_file(dir / tensor_file_name(image_id, idx, TensorKind::Heatmap))),
      offsets_from_tensor(read_tensor_file(dir / tensor_file_name(image_id, idx, TensorKind::Offset)))};
  if (!t.heatmaps.same_shape(kNumKeypoints, config.crop_height, config.crop_width))
    throw SchemaError("heatmap tensor shape does not match the configured crop");
  if (!t.offsets.dx.same_shape(t.heatmaps))
    throw SchemaError("offset tensor shape does not match the heatmap tensor");
  return t;
}

std::string image_tag(ImageId image_id, std::size_t box_index) {
  return "image " + std::to_string(image_id) + " box " + std::to_string(box_index) + ": ";
}

}  // namespace

void PipelineConfig::validate() const {
  noise.validate();
  validate_kappas(kappas);
  if (!(radius > 0)) throw InvalidInput("radius must be positive");
  if (crop_width <= 0 || crop_height <= 0) throw InvalidInput("crop size must be positive");
  if (!(rescale > 0)) throw InvalidInput("rescale must be positive");
  if (!std::isfinite(proposal_threshold)) throw InvalidInput("proposal threshold must be finite");
  if (!(iou_nms >= 0 && iou_nms <= 1)) throw InvalidInput("iou-nms must lie in [0, 1]");
  if (!(oks_nms >= 0 && oks_nms <= 1)) throw InvalidInput("oks-nms must lie in [0, 1]");
  if (max_dets < 1) throw InvalidInput("max-dets must be at least 1");
  if (threads < 1) throw InvalidInput("threads must be at least 1");
}

EvalParams PipelineConfig::eval_params() const {
  EvalParams p;
  p.max_dets = max_dets;
  p.kappas = kappas;
  return p;
}

std::vector<ImageProposals> make_proposals(const PipelineConfig& config,
                                           const AnnotationSet& annotations) {
  std::map<ImageId, std::vector<Boxd>> by_image;
  for (const auto& img : annotations.images) by_image[img.id];
  if (config.boxes_path) {
    for (const BoxRecord& rec : load_boxes(*config.boxes_path))
      by_image[rec.image_id].push_back(rec.box);
  } else {
    for (auto& [id, boxes] : by_image) {
      const auto gts = annotations.poses_for(id);
      boxes = jitter_boxes(gts, config.noise, id);
    }
  }
  std::vector<ImageProposals> out;
  for (auto& [id, boxes] : by_image) out.push_back({id, std::move(boxes)});
  return out;
}

std::vector<std::size_t> select_proposals(const std::vector<Boxd>& boxes,
                                          const PipelineConfig& config) {
  std::vector<std::size_t> passing;
  std::vector<Boxd> candidates;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (boxes[i].score > config.proposal_threshold) {
      passing.push_back(i);
      candidates.push_back(boxes[i]);
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t j : box_nms_indices(candidates, config.iou_nms)) out.push_back(passing[j]);
  return out;
}

std::vector<PoseDetection> decode_proposals(const PipelineConfig& config,
                                            const AnnotationSet& annotations,
                                            const std::vector<ImageProposals>& proposals) {
  std::vector<std::vector<PoseDetection>> per_image(proposals.size());
  parallel_for(proposals.size(), config.threads, [&](std::size_t n) {
    const ImageProposals& image = proposals[n];
    const auto gts = config.tensors_dir ? std::vector<Pose>{} : annotations.poses_for(image.image_id);
    for (std::size_t i : select_proposals(image.boxes, config)) {
      const Boxd& box = image.boxes[i];
      try {
        const CropTransformd transform = crop_for(config, box, config.rescale);
        CropTensors<float> loaded;
        if (config.tensors_dir) loaded = load_crop(config, image.image_id, i);
        const CropTensors<float>& tensors =
            config.tensors_dir ? loaded
                               : oracle_crop(config, gts, box, transform, image.image_id, i);
        PoseDetection det = decode_crop(tensors.heatmaps, tensors.offsets, transform,
                                        config.radius, box, image.image_id);
        if (config.score_source == ScoreSource::Detector) det.score = box.score;
        per_image[n].push_back(det);
      } catch (const std::exception& e) {
        throw StageError("decode", image_tag(image.image_id, i) + e.what());
      }
    }
  });
  std::vector<PoseDetection> out;
  for (auto& dets : per_image) out.insert(out.end(), dets.begin(), dets.end());
  return out;
}

void sort_detections(std::vector<PoseDetection>& dets) {
  std::stable_sort(dets.begin(), dets.end(), [](const PoseDetection& a, const PoseDetection& b) {
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return a.score > b.score;
  });
}

std::vector<PoseDetection> suppress(std::vector<PoseDetection> dets, double threshold,
                                    const KappaTable& kappas) {
  sort_detections(dets);
  auto kept = oks_nms(dets, threshold, kappas);
  sort_detections(kept);
  return kept;
}

PipelineResult run_pipeline(const PipelineConfig& config, const AnnotationSet& annotations) {
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
  std::vector<ImageProposals> proposals;
  try {
    proposals = make_proposals(config, annotations);
  } catch (const std::exception& e) {
    throw StageError("boxes", e.what());
  }
  PipelineResult result;
  auto decoded = decode_proposals(config, annotations, proposals);
  try {
    result.detections = suppress(std::move(decoded), config.oks_nms, config.kappas);
  } catch (const std::exception& e) {
    throw StageError("nms", e.what());
  }
  try {
    result.report = evaluate(result.detections, annotations.annotations, config.eval_params());
  } catch (const std::exception& e) {
    throw StageError("eval", e.what());
  }
  return result;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

}  // namespace

void write_artifacts(const PipelineResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_detections(result.detections, out_dir / "detections.json");
  write_file(out_dir / "report.txt", format_report(result.report));
  write_file(out_dir / "report.csv", report_csv(result.report));
}

void synthesize(const PipelineConfig& config, const AnnotationSet& annotations,
                const std::filesystem::path& out_dir, const SynthOptions& options) {
  config.validate();
  if (options.train_rescale) {
    const auto [lo, hi] = *options.train_rescale;
    if (!(lo > 0 && hi >= lo)) throw InvalidInput("train rescale range must satisfy 0 < lo <= hi");
  }
  std::filesystem::create_directories(out_dir);
  const auto proposals = make_proposals(config, annotations);

  std::vector<BoxRecord> records;
  for (const auto& image : proposals)
    for (const Boxd& b : image.boxes) records.push_back({image.image_id, b});
  write_boxes(records, out_dir / "boxes.json");

  std::vector<nlohmann::json> crops(proposals.size(), nlohmann::json::array());
  parallel_for(proposals.size(), config.threads, [&](std::size_t n) {
    const ImageProposals& image = proposals[n];
    const auto gts = annotations.poses_for(image.image_id);
    for (std::size_t i = 0; i < image.boxes.size(); ++i) {
      double rescale = config.rescale;
      if (options.train_rescale) {
        Rng rng = make_rng(config.noise.seed,
                           {kRescaleStream, crop_stream(image.image_id, i)});
        rescale = std::uniform_real_distribution<double>(options.train_rescale->first,
                                                         options.train_rescale->second)(rng);
      }
      const CropTransformd transform = crop_for(config, image.boxes[i], rescale);
      const auto& tensors =
          oracle_crop(config, gts, image.boxes[i], transform, image.image_id, i);
      const int idx = static_cast<int>(i);
      write_tensor_file(out_dir / tensor_file_name(image.image_id, idx, TensorKind::Heatmap),
                        to_tensor_file(tensors.heatmaps));
      write_tensor_file(out_dir / tensor_file_name(image.image_id, idx, TensorKind::Offset),
                        to_tensor_file(tensors.offsets));
      const Boxd& src = transform.source_box;
      crops[n].push_back({{"image_id", image.image_id},
                          {"box_index", i},
                          {"source_box", {src.x_min, src.y_min, src.width, src.height}},
                          {"scale", transform.scale},
                          {"rescale", rescale}});
    }
  });
  nlohmann::json all = nlohmann::json::array();
  for (auto& c : crops)
    for (auto& entry : c) all.push_back(std::move(entry));
  write_file(out_dir / "crops.json", all.dump(1) + "\n");
}

void apply_parameter(PipelineConfig& config, const std::string& name, double value) {
  if (name == "oks-nms") config.oks_nms = value;
  else if (name == "iou-nms") config.iou_nms = value;
  else if (name == "noise-flip") config.noise.heatmap_flip_prob = value;
  else if (name == "noise-offset-sigma") config.noise.offset_sigma = value;
  else if (name == "noise-box-jitter") config.noise.box_jitter = value;
  else if (name == "noise-duplicates") config.noise.duplicate_rate = value;
  else if (name == "rescale") config.rescale = value;
  else if (name == "radius") config.radius = value;
  else if (name == "proposal-threshold") config.proposal_threshold = value;
  else throw InvalidInput("unknown sweep parameter '" + name + "'");
}

std::vector<SweepRow> sweep(const PipelineConfig& config, const AnnotationSet& annotations,
                            const std::string& parameter, const std::vector<double>& values,
                            int num_seeds) {
  if (num_seeds < 1) throw InvalidInput("sweep: need at least one seed");
  std::vector<SweepRow> rows;
  for (double v : values) {
    SweepRow row{v, {}};
    std::vector<EvalReport> reports;
    for (int s = 0; s < num_seeds; ++s) {
      PipelineConfig cfg = config;
      apply_parameter(cfg, parameter, v);
      cfg.noise.seed = config.noise.seed + static_cast<std::uint64_t>(s);
      reports.push_back(run_pipeline(cfg, annotations).report);
    }
    auto mean = [&](double EvalReport::*field) {
      double sum = 0;
      for (const auto& r : reports) sum += r.*field;
      return sum / static_cast<double>(reports.size());
    };
    for (auto field : {&EvalReport::ap, &EvalReport::ap50, &EvalReport::ap75,
                       &EvalReport::ap_medium, &EvalReport::ap_large, &EvalReport::ar,
                       &EvalReport::ar50, &EvalReport::ar75, &EvalReport::ar_medium,
                       &EvalReport::ar_large})
      row.report.*field = mean(field);
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::string& parameter, const std::vector<SweepRow>& rows) {
  std::string out = "parameter,value";
  for (const auto& [name, v] : report_metrics(EvalReport{})) out += "," + name;
  out += "\n";
  for (const auto& row : rows) {
    out += parameter + "," + format_number(row.value);
    for (const auto& [name, v] : report_metrics(row.report)) out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

}  // namespace toppose
