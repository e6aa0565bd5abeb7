#include "toppose/nms.hpp"

#include <algorithm>
#include <numeric>

namespace toppose {
namespace {

void require_threshold(double threshold, const char* what) {
  if (!(threshold >= 0 && threshold <= 1))
    throw InvalidInput(std::string(what) + ": threshold must lie in [0, 1]");
}

template <typename Range, typename ScoreFn>
std::vector<std::size_t> score_order(const Range& items, ScoreFn score) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score(items[a]) > score(items[b]); });
  return order;
}

}  // namespace

std::vector<std::size_t> box_nms_indices(std::span<const Boxd> boxes, double threshold) {
  require_threshold(threshold, "box_nms");
  std::vector<std::size_t> kept;
  for (std::size_t i : score_order(boxes, [](const Boxd& b) { return b.score; })) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t j) {
      return iou(boxes[i], boxes[j]) > threshold;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::vector<Boxd> box_nms(std::span<const Boxd> boxes, double threshold) {
  std::vector<Boxd> out;
  for (std::size_t i : box_nms_indices(boxes, threshold)) out.push_back(boxes[i]);
  return out;
}

std::vector<std::size_t> oks_nms_indices(std::span<const PoseDetection> dets, double threshold,
                                         const KappaTable& kappas) {
  require_threshold(threshold, "oks_nms");
  std::vector<std::size_t> kept;
  for (std::size_t i : score_order(dets, [](const PoseDetection& d) { return d.score; })) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t j) {
      return dets[j].image_id == dets[i].image_id &&
             oks_between_detections(dets[i], dets[j], kappas) > threshold;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::vector<PoseDetection> oks_nms(std::span<const PoseDetection> dets, double threshold,
                                   const KappaTable& kappas) {
  std::vector<PoseDetection> out;
  for (std::size_t i : oks_nms_indices(dets, threshold, kappas)) out.push_back(dets[i]);
  return out;
}

}  // namespace toppose
