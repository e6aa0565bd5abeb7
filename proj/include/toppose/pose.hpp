#pragma once

#include <optional>

#include "toppose/common.hpp"
#include "toppose/geometry.hpp"

namespace toppose {

/// Ground-truth person annotation in image coordinates.
struct Pose {
  KeypointMatrix keypoints = KeypointMatrix::Zero();
  VisibilityVector visibility = VisibilityVector::Zero();  // 0 unlabeled, 1 occluded, 2 visible
  double area = 0;                                         // segment area, px^2
  ImageId image_id = 0;
  std::optional<Boxd> bbox;
  bool ignore = false;  // crowd or otherwise excluded from scoring

  bool labeled(int k) const { return visibility(k) > 0; }
  int num_labeled() const { return static_cast<int>((visibility.array() > 0).count()); }
};

/// Decoded pose for one person proposal.
struct PoseDetection {
  KeypointMatrix keypoints = KeypointMatrix::Zero();
  KeypointVector keypoint_scores = KeypointVector::Zero();
  double score = 0;
  Boxd box;
  ImageId image_id = 0;
};

/// Tight bounding box of the labeled keypoints; degenerate extents are padded
/// to one pixel. Requires at least one labeled keypoint.
Boxd keypoint_extent(const KeypointMatrix& keypoints, const VisibilityVector& visibility);

/// Stored bbox when present, otherwise the labeled-keypoint extent.
Boxd ground_truth_box(const Pose& pose);

}  // namespace toppose
