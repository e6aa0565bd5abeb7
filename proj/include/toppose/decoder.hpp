#pragma once

// Heatmap/offset fusion by Hough voting, argmax keypoint extraction and
// keypoint-based instance rescoring.

#include <cmath>
#include <numbers>

#include "toppose/geometry.hpp"
#include "toppose/pose.hpp"
#include "toppose/targets.hpp"
#include "toppose/tensor.hpp"

namespace toppose {

/// Adds the votes of one channel to `out` (same shape). Each grid point j
/// votes h(j) / (pi R^2) at j + F(j), splatted bilinearly onto the
/// surrounding grid points; mass landing outside the grid is dropped.
/// Accumulation order is fixed (row-major), so the result is deterministic.
template <typename Scalar>
void accumulate_votes(const Plane<Scalar>& heat, const Plane<Scalar>& dx, const Plane<Scalar>& dy,
                      double radius, Plane<double>& out) {
  const int h = static_cast<int>(heat.rows());
  const int w = static_cast<int>(heat.cols());
  const double norm = 1.0 / (std::numbers::pi * radius * radius);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double weight = static_cast<double>(heat(r, c));
      if (weight == 0) continue;
      const double tx = c + static_cast<double>(dx(r, c));
      const double ty = r + static_cast<double>(dy(r, c));
      if (!(tx > -1 && tx < w && ty > -1 && ty < h)) continue;
      const double x0 = std::floor(tx);
      const double y0 = std::floor(ty);
      const double fx = tx - x0;
      const double fy = ty - y0;
      const int c0 = static_cast<int>(x0);
      const int r0 = static_cast<int>(y0);
      const double vote = weight * norm;
      const double wx[2] = {1.0 - fx, fx};
      const double wy[2] = {1.0 - fy, fy};
      for (int i = 0; i < 2; ++i) {
        const int rr = r0 + i;
        if (rr < 0 || rr >= h || wy[i] == 0) continue;
        for (int j = 0; j < 2; ++j) {
          const int cc = c0 + j;
          if (cc < 0 || cc >= w || wx[j] == 0) continue;
          out(rr, cc) += vote * wy[i] * wx[j];
        }
      }
    }
  }
}

/// Hough-voting fusion of heatmaps and offsets into activation maps.
template <typename Scalar>
ActivationMaps aggregate(const HeatmapStack<Scalar>& heatmaps, const OffsetStack<Scalar>& offsets,
                         double radius = kDefaultDiskRadius) {
  if (!(radius > 0)) throw InvalidInput("aggregate: radius must be positive");
  require_same_shape(heatmaps, offsets.dx, "aggregate");
  require_same_shape(heatmaps, offsets.dy, "aggregate");
  ActivationMaps out(heatmaps.channels(), heatmaps.height(), heatmaps.width());
  for (int k = 0; k < heatmaps.channels(); ++k)
    accumulate_votes(heatmaps[k], offsets.dx[k], offsets.dy[k], radius, out[k]);
  return out;
}

/// Row-major index of the maximum; ties go to the smallest index.
Eigen::Index peak_index(const Plane<double>& plane);

struct LocalizedKeypoints {
  KeypointMatrix positions;  // image px
  KeypointVector scores;     // channel maxima
};

/// Argmax per channel mapped back to image coordinates. Ties go to the
/// smallest row-major index.
LocalizedKeypoints localize(const ActivationMaps& maps, const CropTransformd& transform);

/// Mean over channels of the per-channel maximum activation.
double rescore(const ActivationMaps& maps);

template <typename Scalar>
PoseDetection decode_crop(const HeatmapStack<Scalar>& heatmaps, const OffsetStack<Scalar>& offsets,
                          const CropTransformd& transform, double radius, const Boxd& box,
                          ImageId image_id) {
  if (heatmaps.channels() != kNumKeypoints)
    throw InvalidInput("decode_crop: expected one heatmap channel per keypoint");
  if (!(radius > 0)) throw InvalidInput("decode_crop: radius must be positive");
  require_same_shape(heatmaps, offsets.dx, "decode_crop");
  require_same_shape(heatmaps, offsets.dy, "decode_crop");
  // Same result as localize(aggregate(...)), one channel at a time through a
  // reused per-thread plane.
  thread_local Plane<double> f;
  f.resize(heatmaps.height(), heatmaps.width());
  PoseDetection det;
  for (int k = 0; k < kNumKeypoints; ++k) {
    f.setZero();
    accumulate_votes(heatmaps[k], offsets.dx[k], offsets.dy[k], radius, f);
    const Eigen::Index best = peak_index(f);
    const Point<double> at(static_cast<double>(best % f.cols()), static_cast<double>(best / f.cols()));
    det.keypoints.row(k) = transform.crop_to_image(at).transpose();
    det.keypoint_scores(k) = f.data()[best];
  }
  det.score = det.keypoint_scores.mean();
  det.box = box;
  det.image_id = image_id;
  return det;
}

}  // namespace toppose
