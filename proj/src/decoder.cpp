#include "toppose/decoder.hpp"

namespace toppose {

Eigen::Index peak_index(const Plane<double>& plane) {
  // Eigen's maxCoeff visits column-major; scan the row-major storage directly.
  Eigen::Index best = 0;
  const double* data = plane.data();
  for (Eigen::Index i = 1; i < plane.size(); ++i)
    if (data[i] > data[best]) best = i;
  return best;
}

LocalizedKeypoints localize(const ActivationMaps& maps, const CropTransformd& transform) {
  if (maps.channels() != kNumKeypoints)
    throw InvalidInput("localize: expected one activation channel per keypoint");
  LocalizedKeypoints out;
  for (int k = 0; k < kNumKeypoints; ++k) {
    const auto& f = maps[k];
    const Eigen::Index best = peak_index(f);
    const double row = static_cast<double>(best / f.cols());
    const double col = static_cast<double>(best % f.cols());
    out.positions.row(k) = transform.crop_to_image(Point<double>(col, row)).transpose();
    out.scores(k) = f.data()[best];
  }
  return out;
}

double rescore(const ActivationMaps& maps) {
  if (maps.channels() == 0) return 0;
  double total = 0;
  for (const auto& f : maps) total += f.maxCoeff();
  return total / maps.channels();
}

}  // namespace toppose
