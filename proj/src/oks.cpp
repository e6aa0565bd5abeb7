#include "toppose/oks.hpp"

#include <cmath>

namespace toppose {

KappaTable coco_kappas() {
  KappaTable k;
  k << 0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072, 0.062, 0.062, 0.107, 0.107,
      0.087, 0.087, 0.089, 0.089;
  return k;
}

void validate_kappas(const KappaTable& kappas) {
  if (!(kappas.array() > 0).all() || !kappas.allFinite())
    throw InvalidInput("kappa constants must be positive and finite");
}

double oks(const KeypointMatrix& candidate, const KeypointMatrix& reference,
           const Eigen::Array<bool, kNumKeypoints, 1>& visible, double scale_area,
           const KappaTable& kappas) {
  if (!(scale_area > 0) || !std::isfinite(scale_area))
    throw InvalidInput("oks: reference area must be positive");
  const auto count = visible.count();
  if (count == 0) throw UndefinedSimilarity("oks: reference has no labeled keypoints");
  const Eigen::Array<double, kNumKeypoints, 1> d2 =
      (candidate - reference).rowwise().squaredNorm().array();
  const Eigen::Array<double, kNumKeypoints, 1> falloff =
      2.0 * scale_area * kappas.array().square();
  const Eigen::Array<double, kNumKeypoints, 1> sim = (-d2 / falloff).exp();
  return visible.select(sim, 0.0).sum() / static_cast<double>(count);
}

double oks(const PoseDetection& candidate, const Pose& reference, const KappaTable& kappas) {
  return oks(candidate.keypoints, reference.keypoints, reference.visibility.array() > 0,
             reference.area, kappas);
}

double oks_between_detections(const PoseDetection& candidate, const PoseDetection& reference,
                              const KappaTable& kappas) {
  const double area = reference.box.area();
  if (!(area > 0)) throw InvalidInput("oks_between_detections: degenerate reference box");
  return oks(candidate.keypoints, reference.keypoints,
             Eigen::Array<bool, kNumKeypoints, 1>::Constant(true), area, kappas);
}

}  // namespace toppose
