#pragma once

// COCO-style keypoint AP/AR evaluation.

#include <limits>
#include <span>
#include <vector>

#include "toppose/oks.hpp"
#include "toppose/pose.hpp"

namespace toppose {

struct AreaRange {
  double lo = 0;
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double area) const { return area >= lo && area <= hi; }
};

inline constexpr AreaRange kAreaAll{0.0, 1e10};
inline constexpr AreaRange kAreaMedium{32.0 * 32.0, 96.0 * 96.0};
inline constexpr AreaRange kAreaLarge{96.0 * 96.0, 1e10};

struct EvalParams {
  std::vector<double> oks_thresholds = default_oks_thresholds();
  AreaRange all = kAreaAll;
  AreaRange medium = kAreaMedium;
  AreaRange large = kAreaLarge;
  int max_dets = 20;
  int recall_points = 101;
  KappaTable kappas = coco_kappas();

  /// 0.50, 0.55, ..., 0.95
  static std::vector<double> default_oks_thresholds();
};

/// Undefined cells (no scorable ground truth) are NaN.
struct EvalReport {
  double ap = 0, ap50 = 0, ap75 = 0, ap_medium = 0, ap_large = 0;
  double ar = 0, ar50 = 0, ar75 = 0, ar_medium = 0, ar_large = 0;
};

struct ImageMatch {
  std::vector<int> det_to_gt;    // -1 when unmatched
  std::vector<bool> det_ignore;  // matched to an ignored ground truth
  std::vector<bool> gt_matched;
};

/// Greedy matching for one image. `dets` must be sorted by descending score.
/// Each detection takes the still-unmatched ground truth with the highest
/// OKS >= threshold, preferring non-ignored ground truths; ties go to the
/// lower index. Ignored ground truths without labeled keypoints cannot match.
ImageMatch match_image(std::span<const PoseDetection> dets, std::span<const Pose> gts,
                       const std::vector<bool>& gt_ignore, double oks_threshold,
                       const KappaTable& kappas = coco_kappas());

/// Overload using each ground truth's own ignore flag (and unlabeled poses).
ImageMatch match_image(std::span<const PoseDetection> dets, std::span<const Pose> gts,
                       double oks_threshold, const KappaTable& kappas = coco_kappas());

/// Area of the tight box around a detection's keypoints, used to decide
/// whether an unmatched detection falls into an area range.
double detection_area(const PoseDetection& det);

/// One (threshold, area range) cell of the precision/recall table.
struct EvalCell {
  double ap = std::numeric_limits<double>::quiet_NaN();
  double recall = std::numeric_limits<double>::quiet_NaN();
};

EvalCell evaluate_cell(std::span<const PoseDetection> dets, std::span<const Pose> gts,
                       double oks_threshold, const AreaRange& area, const EvalParams& params);

EvalReport evaluate(std::span<const PoseDetection> dets, std::span<const Pose> gts,
                    const EvalParams& params = {});

}  // namespace toppose
