#pragma once

// Synthetic stand-in for the detector and pose networks: perfect or
// controllably corrupted tensors and proposals derived from ground truth.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "toppose/pose.hpp"
#include "toppose/rng.hpp"
#include "toppose/targets.hpp"
#include "toppose/tensor.hpp"

namespace toppose {

struct NoiseConfig {
  double heatmap_flip_prob = 0;  // per-pixel Bernoulli flip h -> 1 - h
  double offset_sigma = 0;       // crop px, isotropic Gaussian
  double box_jitter = 0;         // corner perturbation, fraction of box size
  double duplicate_rate = 0;     // expected extra boxes per image
  std::uint64_t seed = 0;

  void validate() const;
};

template <typename Scalar>
struct CropTensors {
  HeatmapStack<Scalar> heatmaps;
  OffsetStack<Scalar> offsets;
};

/// The training targets of `pose` with no background people, written into
/// `out` (storage is reused when the shape already matches).
template <typename Scalar>
void oracle_tensors_into(const Pose& pose, const CropTransformd& transform, double radius,
                         CropTensors<Scalar>& out) {
  if (!(radius > 0)) throw InvalidInput("oracle_tensors: radius must be positive");
  out.heatmaps.reset(kNumKeypoints, transform.crop_height, transform.crop_width);
  out.offsets.reset(kNumKeypoints, transform.crop_height, transform.crop_width);
  paint_foreground(pose, transform, radius, out.heatmaps, out.offsets);
}

template <typename Scalar = float>
CropTensors<Scalar> oracle_tensors(const Pose& pose, const CropTransformd& transform,
                                   double radius = kDefaultDiskRadius) {
  CropTensors<Scalar> t;
  oracle_tensors_into(pose, transform, radius, t);
  return t;
}

/// Applies heatmap flips, then Gaussian offset noise at every position whose
/// (flipped) heatmap value is nonzero; other offsets never receive votes and
/// are left as is. Draws come from the substream (cfg.seed, stream_key).
/// Zero noise returns the input unchanged.
template <typename Scalar>
CropTensors<Scalar> perturb(CropTensors<Scalar> tensors, const NoiseConfig& cfg,
                            std::uint64_t stream_key = 0) {
  cfg.validate();
  if (cfg.heatmap_flip_prob == 0 && cfg.offset_sigma == 0) return tensors;
  Rng rng = make_rng(cfg.seed, {0x7045u, stream_key});
  auto& heat = tensors.heatmaps;
  const int channels = heat.channels();
  const Eigen::Index plane_size = static_cast<Eigen::Index>(heat.height()) * heat.width();

  if (cfg.heatmap_flip_prob >= 1) {
    for (auto& p : heat) p = Scalar(1) - p;
  } else if (cfg.heatmap_flip_prob > 0) {
    // Flipped positions form a Bernoulli process; walk it by geometric gaps.
    std::geometric_distribution<long long> gap(cfg.heatmap_flip_prob);
    const long long total = static_cast<long long>(channels) * plane_size;
    for (long long i = gap(rng); i < total; i += 1 + gap(rng)) {
      auto& p = heat[static_cast<int>(i / plane_size)];
      Scalar& v = p.data()[i % plane_size];
      v = Scalar(1) - v;
    }
  }

  if (cfg.offset_sigma > 0) {
    std::normal_distribution<double> noise(0.0, cfg.offset_sigma);
    for (int k = 0; k < channels; ++k) {
      const Scalar* h = heat[k].data();
      Scalar* dx = tensors.offsets.dx[k].data();
      Scalar* dy = tensors.offsets.dy[k].data();
      for (Eigen::Index i = 0; i < plane_size; ++i) {
        if (h[i] == Scalar(0)) continue;
        dx[i] = static_cast<Scalar>(dx[i] + noise(rng));
        dy[i] = static_cast<Scalar>(dy[i] + noise(rng));
      }
    }
  }
  return tensors;
}

/// Proposals for one image: one box per scorable ground truth (stored bbox or
/// keypoint extent) with corners perturbed by box_jitter, plus
/// Poisson(duplicate_rate) jittered copies of random ground-truth boxes.
/// Scores are 1 for unjittered primary boxes and uniform in (0.3, 1]
/// otherwise.
std::vector<Boxd> jitter_boxes(std::span<const Pose> gts, const NoiseConfig& cfg,
                               ImageId image_id);

/// Index of the scorable ground truth overlapping `box` most (IoU with its
/// ground-truth box), or -1 when nothing overlaps.
int assign_ground_truth(const Boxd& box, std::span<const Pose> gts);

}  // namespace toppose
