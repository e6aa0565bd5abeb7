#include "toppose/pose.hpp"

#include <limits>

namespace toppose {

Boxd keypoint_extent(const KeypointMatrix& keypoints, const VisibilityVector& visibility) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  bool any = false;
  for (int k = 0; k < kNumKeypoints; ++k) {
    if (visibility(k) <= 0) continue;
    any = true;
    x0 = std::min(x0, keypoints(k, 0));
    x1 = std::max(x1, keypoints(k, 0));
    y0 = std::min(y0, keypoints(k, 1));
    y1 = std::max(y1, keypoints(k, 1));
  }
  if (!any) throw InvalidInput("keypoint_extent: no labeled keypoints");
  Boxd box{x0, y0, x1 - x0, y1 - y0, 1.0};
  if (box.width < 1) {
    box.x_min -= (1 - box.width) / 2;
    box.width = 1;
  }
  if (box.height < 1) {
    box.y_min -= (1 - box.height) / 2;
    box.height = 1;
  }
  return box;
}

Boxd ground_truth_box(const Pose& pose) {
  if (pose.bbox && pose.bbox->width > 0 && pose.bbox->height > 0) {
    Boxd box = *pose.bbox;
    box.score = 1;
    return box;
  }
  return keypoint_extent(pose.keypoints, pose.visibility);
}

}  // namespace toppose
