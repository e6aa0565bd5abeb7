#pragma once

// File- or oracle-driven two-stage cascade: person proposals -> crops ->
// heatmap/offset decoding -> OKS-NMS -> evaluation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "toppose/annotations.hpp"
#include "toppose/eval.hpp"
#include "toppose/oracle.hpp"
#include "toppose/pose.hpp"

namespace toppose {

/// Error raised inside a named pipeline stage ("boxes", "decode", ...).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class ScoreSource { Rescore, Detector };

struct PipelineConfig {
  std::optional<std::filesystem::path> boxes_path;   // else oracle proposals
  std::optional<std::filesystem::path> tensors_dir;  // else oracle tensors
  NoiseConfig noise;
  double radius = 25.0;
  int crop_width = 257;
  int crop_height = 353;
  double rescale = 1.25;
  double proposal_threshold = 0.3;  // keep boxes scoring strictly above
  double iou_nms = 0.6;
  double oks_nms = 0.5;
  int max_dets = 20;
  ScoreSource score_source = ScoreSource::Rescore;
  KappaTable kappas = coco_kappas();
  int threads = 1;

  void validate() const;
  EvalParams eval_params() const;
};

struct PipelineResult {
  std::vector<PoseDetection> detections;  // sorted by image id, then score desc
  EvalReport report;
};

/// Proposals for each image, keyed by the box's index within its image.
struct ImageProposals {
  ImageId image_id = 0;
  std::vector<Boxd> boxes;
};

std::vector<ImageProposals> make_proposals(const PipelineConfig& config,
                                           const AnnotationSet& annotations);

/// Score filter and IOU-NMS; returns surviving indices into `boxes`.
std::vector<std::size_t> select_proposals(const std::vector<Boxd>& boxes,
                                          const PipelineConfig& config);

/// Decodes every selected proposal (no OKS-NMS).
std::vector<PoseDetection> decode_proposals(const PipelineConfig& config,
                                            const AnnotationSet& annotations,
                                            const std::vector<ImageProposals>& proposals);

/// OKS-NMS per image, output in deterministic order.
std::vector<PoseDetection> suppress(std::vector<PoseDetection> dets, double threshold,
                                    const KappaTable& kappas);

/// Sorted by image id, then descending score (stable).
void sort_detections(std::vector<PoseDetection>& dets);

PipelineResult run_pipeline(const PipelineConfig& config, const AnnotationSet& annotations);

/// detections.json, report.txt, report.csv
void write_artifacts(const PipelineResult& result, const std::filesystem::path& out_dir);

/// Oracle tensors + boxes for every image, written as a boxes file and one
/// heat/off tensor pair per proposal. `train_rescale` draws the crop
/// context factor uniformly from [lo, hi] per crop instead of
/// config.rescale.
struct SynthOptions {
  std::optional<std::pair<double, double>> train_rescale;
};
void synthesize(const PipelineConfig& config, const AnnotationSet& annotations,
                const std::filesystem::path& out_dir, const SynthOptions& options = {});

struct SweepRow {
  double value = 0;
  EvalReport report;  // averaged over seeds
};

/// Names accepted by sweep(): oks-nms, iou-nms, noise-flip,
/// noise-offset-sigma, noise-box-jitter, noise-duplicates, rescale, radius,
/// proposal-threshold.
void apply_parameter(PipelineConfig& config, const std::string& name, double value);

std::vector<SweepRow> sweep(const PipelineConfig& config, const AnnotationSet& annotations,
                            const std::string& parameter, const std::vector<double>& values,
                            int num_seeds = 1);

std::string sweep_csv(const std::string& parameter, const std::vector<SweepRow>& rows);

}  // namespace toppose
