#pragma once

#include "toppose/pose.hpp"

namespace toppose {

/// Per-keypoint falloff constants of the similarity Gaussian.
using KappaTable = KeypointVector;

/// COCO reference constants (nose, eyes, ears, shoulders, elbows, wrists,
/// hips, knees, ankles; left/right mirrored).
KappaTable coco_kappas();

/// Throws InvalidInput unless every constant is positive and finite.
void validate_kappas(const KappaTable& kappas);

/// exp(-d_k^2 / (2 s^2 kappa_k^2)) averaged over keypoints with visible(k),
/// where s^2 == scale_area.
double oks(const KeypointMatrix& candidate, const KeypointMatrix& reference,
           const Eigen::Array<bool, kNumKeypoints, 1>& visible, double scale_area,
           const KappaTable& kappas);

/// Similarity of a detection to a ground-truth pose; scale from the
/// annotation area, only labeled keypoints count.
double oks(const PoseDetection& candidate, const Pose& reference,
           const KappaTable& kappas = coco_kappas());

/// Similarity between two detections with `reference` (the kept detection
/// during NMS) supplying the scale through its box area. All keypoints count.
double oks_between_detections(const PoseDetection& candidate, const PoseDetection& reference,
                              const KappaTable& kappas = coco_kappas());

}  // namespace toppose
