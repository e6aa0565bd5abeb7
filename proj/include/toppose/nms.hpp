#pragma once

#include <span>
#include <vector>

#include "toppose/geometry.hpp"
#include "toppose/oks.hpp"
#include "toppose/pose.hpp"

namespace toppose {

inline constexpr double kDefaultIouNmsThreshold = 0.6;
inline constexpr double kDefaultOksNmsThreshold = 0.5;

// Greedy suppression: candidates are visited by descending score (stable, so
// ties keep input order); a candidate is dropped iff its overlap with some
// already kept item is strictly above the threshold. Results are indices
// into the input, in visiting order.

std::vector<std::size_t> box_nms_indices(std::span<const Boxd> boxes,
                                         double threshold = kDefaultIouNmsThreshold);

std::vector<Boxd> box_nms(std::span<const Boxd> boxes, double threshold = kDefaultIouNmsThreshold);

/// Only detections with equal image_id interact.
std::vector<std::size_t> oks_nms_indices(std::span<const PoseDetection> dets,
                                         double threshold = kDefaultOksNmsThreshold,
                                         const KappaTable& kappas = coco_kappas());

std::vector<PoseDetection> oks_nms(std::span<const PoseDetection> dets,
                                   double threshold = kDefaultOksNmsThreshold,
                                   const KappaTable& kappas = coco_kappas());

}  // namespace toppose
