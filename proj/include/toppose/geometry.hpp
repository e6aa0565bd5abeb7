#pragma once

// Box arithmetic and the image <-> crop coordinate algebra used to feed the
// pose estimator. Coordinates are continuous; pixel centers sit at integer
// coordinates, so pixel i covers [i - 0.5, i + 0.5).

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "toppose/common.hpp"

namespace toppose {

template <typename Scalar>
using Point = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct Box {
  Scalar x_min = 0;
  Scalar y_min = 0;
  Scalar width = 0;
  Scalar height = 0;
  Scalar score = 1;

  Point<Scalar> origin() const { return {x_min, y_min}; }
  Point<Scalar> center() const { return {x_min + width / 2, y_min + height / 2}; }
  Scalar x_max() const { return x_min + width; }
  Scalar y_max() const { return y_min + height; }
  Scalar area() const { return width * height; }

  bool valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(width) &&
           std::isfinite(height) && width > 0 && height > 0 && score >= 0 && score <= 1;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

using Boxd = Box<double>;

template <typename Scalar>
void require_valid(const Box<Scalar>& box, const char* what) {
  if (!(box.width > 0 && box.height > 0))
    throw InvalidInput(std::string(what) + ": box dimensions must be positive");
  if (!box.valid()) throw InvalidInput(std::string(what) + ": box is not valid");
}

template <typename Scalar>
Box<Scalar> box_from_center(const Point<Scalar>& center, Scalar width, Scalar height,
                            Scalar score = 1) {
  return {center.x() - width / 2, center.y() - height / 2, width, height, score};
}

/// Extends width or height (never shrinks) so that height / width == hw_ratio,
/// keeping the center fixed.
template <typename Scalar>
Box<Scalar> fix_aspect(const Box<Scalar>& box, Scalar hw_ratio) {
  require_valid(box, "fix_aspect");
  if (!(hw_ratio > 0)) throw InvalidInput("fix_aspect: ratio must be positive");
  const Scalar current = box.height / box.width;
  // Within rounding of the target the box is left untouched, which makes the
  // operation idempotent.
  if (std::abs(current - hw_ratio) <= Scalar(1e-12) * hw_ratio) return box;
  if (current < hw_ratio)
    return box_from_center<Scalar>(box.center(), box.width, box.width * hw_ratio, box.score);
  return box_from_center<Scalar>(box.center(), box.height / hw_ratio, box.height, box.score);
}

template <typename Scalar>
Box<Scalar> rescale_box(const Box<Scalar>& box, Scalar factor) {
  require_valid(box, "rescale_box");
  if (!(factor > 0)) throw InvalidInput("rescale_box: factor must be positive");
  if (factor == 1) return box;
  return box_from_center<Scalar>(box.center(), box.width * factor, box.height * factor,
                                 box.score);
}

/// Per-axis affine map between image pixels and a fixed-size crop grid.
template <typename Scalar>
struct CropTransform {
  Box<Scalar> source_box;
  int crop_width = 257;
  int crop_height = 353;
  Scalar scale = 1;  // crop px per image px, both axes

  Point<Scalar> image_to_crop(const Point<Scalar>& p) const {
    return (p - source_box.origin()) * scale;
  }
  Point<Scalar> crop_to_image(const Point<Scalar>& q) const {
    return q / scale + source_box.origin();
  }
};

using CropTransformd = CropTransform<double>;

inline constexpr int kDefaultCropWidth = 257;
inline constexpr int kDefaultCropHeight = 353;
inline constexpr double kDefaultRescale = 1.25;

template <typename Scalar>
CropTransform<Scalar> make_crop_transform(const Box<Scalar>& box, int crop_width = kDefaultCropWidth,
                                          int crop_height = kDefaultCropHeight,
                                          Scalar rescale = Scalar(kDefaultRescale)) {
  if (crop_width <= 0 || crop_height <= 0)
    throw InvalidInput("make_crop_transform: crop size must be positive");
  const Scalar ratio = Scalar(crop_height) / Scalar(crop_width);
  CropTransform<Scalar> t;
  t.source_box = rescale_box(fix_aspect(box, ratio), rescale);
  t.crop_width = crop_width;
  t.crop_height = crop_height;
  t.scale = Scalar(crop_width) / t.source_box.width;
  return t;
}

template <typename Scalar>
Scalar intersection_area(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min, b.x_min);
  const Scalar h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min, b.y_min);
  return (w > 0 && h > 0) ? w * h : Scalar(0);
}

template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  if (a.x_min == b.x_min && a.y_min == b.y_min && a.width == b.width && a.height == b.height)
    return 1;
  const Scalar inter = intersection_area(a, b);
  if (inter <= 0) return 0;
  const Scalar uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

}  // namespace toppose
