#include "toppose/oracle.hpp"

#include <cmath>

namespace toppose {
namespace {

bool scorable(const Pose& p) { return !p.ignore && p.num_labeled() > 0; }

bool in_unit_interval(double v) { return v >= 0 && v <= 1; }

}  // namespace

void NoiseConfig::validate() const {
  if (!in_unit_interval(heatmap_flip_prob))
    throw InvalidInput("noise: heatmap_flip_prob must lie in [0, 1]");
  if (!(offset_sigma >= 0) || !std::isfinite(offset_sigma))
    throw InvalidInput("noise: offset_sigma must be non-negative");
  if (!(box_jitter >= 0) || !std::isfinite(box_jitter))
    throw InvalidInput("noise: box_jitter must be non-negative");
  if (!(duplicate_rate >= 0) || !std::isfinite(duplicate_rate))
    throw InvalidInput("noise: duplicate_rate must be non-negative");
}

std::vector<Boxd> jitter_boxes(std::span<const Pose> gts, const NoiseConfig& cfg,
                               ImageId image_id) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, {0xB0C5u, static_cast<std::uint64_t>(image_id)});
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> below(0.0, 0.7);

  auto perturbed = [&](const Boxd& box) {
    if (cfg.box_jitter == 0) return box;
    const double jw = cfg.box_jitter * box.width;
    const double jh = cfg.box_jitter * box.height;
    double x0 = box.x_min + unit(rng) * jw;
    double y0 = box.y_min + unit(rng) * jh;
    double x1 = box.x_max() + unit(rng) * jw;
    double y1 = box.y_max() + unit(rng) * jh;
    if (x1 < x0) std::swap(x0, x1);
    if (y1 < y0) std::swap(y0, y1);
    return Boxd{x0, y0, std::max(1.0, x1 - x0), std::max(1.0, y1 - y0), box.score};
  };
  auto sampled_score = [&] { return 1.0 - below(rng); };  // (0.3, 1]

  std::vector<const Pose*> sources;
  for (const Pose& g : gts)
    if (scorable(g)) sources.push_back(&g);

  std::vector<Boxd> boxes;
  for (const Pose* g : sources) {
    Boxd box = perturbed(ground_truth_box(*g));
    box.score = cfg.box_jitter == 0 ? 1.0 : sampled_score();
    boxes.push_back(box);
  }
  if (cfg.duplicate_rate > 0 && !sources.empty()) {
    const int extra = std::poisson_distribution<int>(cfg.duplicate_rate)(rng);
    std::uniform_int_distribution<std::size_t> pick(0, sources.size() - 1);
    for (int i = 0; i < extra; ++i) {
      Boxd box = perturbed(ground_truth_box(*sources[pick(rng)]));
      box.score = sampled_score();
      boxes.push_back(box);
    }
  }
  return boxes;
}

int assign_ground_truth(const Boxd& box, std::span<const Pose> gts) {
  int best = -1;
  double best_iou = 0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (!scorable(gts[i])) continue;
    const double o = iou(box, ground_truth_box(gts[i]));
    if (o > best_iou) {
      best_iou = o;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace toppose
