#pragma once

// Ground-truth heatmap/offset targets and the training losses evaluated on
// them. Everything here is a pure function of its inputs; no gradients.

#include <cmath>
#include <limits>
#include <span>

#include "toppose/geometry.hpp"
#include "toppose/pose.hpp"
#include "toppose/tensor.hpp"

namespace toppose {

inline constexpr double kDefaultDiskRadius = 25.0;
inline constexpr double kDefaultHuberDelta = 1.0;
inline constexpr double kHeatmapLambda = 4.0;
inline constexpr double kOffsetLambda = 1.0;
inline constexpr double kProbabilityClamp = 1e-12;

/// Calls fn(row, col) for every grid point within the closed disk of the
/// given radius around center (crop coordinates, x = col, y = row).
template <typename Fn>
void for_each_disk_point(const Point<double>& center, double radius, int height, int width,
                         Fn&& fn) {
  const double r2 = radius * radius;
  const int row_lo = std::max(0, static_cast<int>(std::ceil(center.y() - radius)));
  const int row_hi = std::min(height - 1, static_cast<int>(std::floor(center.y() + radius)));
  const int col_lo = std::max(0, static_cast<int>(std::ceil(center.x() - radius)));
  const int col_hi = std::min(width - 1, static_cast<int>(std::floor(center.x() + radius)));
  for (int r = row_lo; r <= row_hi; ++r) {
    const double dy = r - center.y();
    for (int c = col_lo; c <= col_hi; ++c) {
      const double dx = c - center.x();
      if (dx * dx + dy * dy <= r2) fn(r, c);
    }
  }
}

template <typename Scalar>
struct TrainingTargets {
  HeatmapStack<Scalar> heatmaps;
  OffsetStack<Scalar> offsets;
  LossMask final_mask;         // all positions
  LossMask intermediate_mask;  // excludes background people's disks
};

/// Disk heatmaps and offsets l_k - x for every labeled keypoint of `fg`,
/// written into zero-initialized stacks of the crop's shape.
template <typename Scalar>
void paint_foreground(const Pose& fg, const CropTransformd& transform, double radius,
                      HeatmapStack<Scalar>& heatmaps, OffsetStack<Scalar>& offsets) {
  const int h = transform.crop_height;
  const int w = transform.crop_width;
  for (int k = 0; k < kNumKeypoints; ++k) {
    if (!fg.labeled(k)) continue;
    const Point<double> l = transform.image_to_crop(fg.keypoints.row(k).transpose());
    auto& heat = heatmaps[k];
    auto& dx = offsets.dx[k];
    auto& dy = offsets.dy[k];
    for_each_disk_point(l, radius, h, w, [&](int r, int c) {
      heat(r, c) = Scalar(1);
      dx(r, c) = static_cast<Scalar>(l.x() - c);
      dy(r, c) = static_cast<Scalar>(l.y() - r);
    });
  }
}

/// Targets for the foreground person of one crop. Unlabeled foreground
/// keypoints leave their channels zero.
template <typename Scalar = double>
TrainingTargets<Scalar> make_targets(const Pose& fg, std::span<const Pose> background,
                                     const CropTransformd& transform,
                                     double radius = kDefaultDiskRadius) {
  if (!(radius > 0)) throw InvalidInput("make_targets: radius must be positive");
  const int h = transform.crop_height;
  const int w = transform.crop_width;
  TrainingTargets<Scalar> t{HeatmapStack<Scalar>(kNumKeypoints, h, w),
                            OffsetStack<Scalar>(kNumKeypoints, h, w),
                            LossMask(kNumKeypoints, h, w, true),
                            LossMask(kNumKeypoints, h, w, true)};
  paint_foreground(fg, transform, radius, t.heatmaps, t.offsets);
  for (const Pose& other : background) {
    for (int k = 0; k < kNumKeypoints; ++k) {
      if (!other.labeled(k)) continue;
      const Point<double> l = transform.image_to_crop(other.keypoints.row(k).transpose());
      auto& mask = t.intermediate_mask[k];
      for_each_disk_point(l, radius, h, w, [&](int r, int c) { mask(r, c) = false; });
    }
  }
  return t;
}

/// Huber penalty on a non-negative residual norm.
template <typename Scalar>
Scalar huber(Scalar u, Scalar delta = Scalar(kDefaultHuberDelta)) {
  if (!(u >= 0)) throw InvalidInput("huber: residual norm must be non-negative");
  if (!(delta > 0)) throw InvalidInput("huber: delta must be positive");
  if (u <= delta) return u * u / 2;
  return delta * (u - delta / 2);
}

/// Sum of per-position logistic losses over masked-in (channel, pixel) pairs.
template <typename Scalar>
double heatmap_loss(const HeatmapStack<Scalar>& pred, const HeatmapStack<Scalar>& target,
                    const LossMask& mask) {
  require_same_shape(pred, target, "heatmap_loss");
  require_same_shape(pred, mask, "heatmap_loss");
  double total = 0;
  for (int k = 0; k < pred.channels(); ++k) {
    const auto p = pred[k].template cast<double>().cwiseMax(kProbabilityClamp).cwiseMin(
        1.0 - kProbabilityClamp);
    const auto y = target[k].template cast<double>();
    const auto cell = -(y * p.log() + (1.0 - y) * (1.0 - p).log());
    total += mask[k].select(cell, 0.0).sum();
  }
  return total;
}

/// Huber loss of predicted offsets inside each labeled foreground disk.
template <typename Scalar>
double offset_loss(const OffsetStack<Scalar>& pred, const Pose& fg, const CropTransformd& transform,
                   double radius = kDefaultDiskRadius, double delta = kDefaultHuberDelta) {
  if (!(radius > 0)) throw InvalidInput("offset_loss: radius must be positive");
  if (!pred.dx.same_shape(kNumKeypoints, transform.crop_height, transform.crop_width) ||
      !pred.dy.same_shape(pred.dx))
    throw InvalidInput("offset_loss: offset stack does not match the crop shape");
  double total = 0;
  for (int k = 0; k < kNumKeypoints; ++k) {
    if (!fg.labeled(k)) continue;
    const Point<double> l = transform.image_to_crop(fg.keypoints.row(k).transpose());
    const auto& dx = pred.dx[k];
    const auto& dy = pred.dy[k];
    for_each_disk_point(l, radius, pred.height(), pred.width(), [&](int r, int c) {
      const double ex = static_cast<double>(dx(r, c)) - (l.x() - c);
      const double ey = static_cast<double>(dy(r, c)) - (l.y() - r);
      total += huber(std::hypot(ex, ey), delta);
    });
  }
  return total;
}

inline double total_loss(double heatmap_loss, double offset_loss, double lambda_h = kHeatmapLambda,
                         double lambda_o = kOffsetLambda) {
  return lambda_h * heatmap_loss + lambda_o * offset_loss;
}

}  // namespace toppose
