#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace toppose {

/// Number of COCO person keypoints.
inline constexpr int kNumKeypoints = 17;

inline constexpr std::array<std::string_view, kNumKeypoints> kKeypointNames = {
    "nose",          "left_eye",       "right_eye",  "left_ear",   "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
    "right_wrist",   "left_hip",       "right_hip",  "left_knee",  "right_knee",
    "left_ankle",    "right_ankle"};

using ImageId = std::int64_t;

/// Row k holds (x, y) of keypoint k.
using KeypointMatrix = Eigen::Matrix<double, kNumKeypoints, 2>;
using KeypointVector = Eigen::Matrix<double, kNumKeypoints, 1>;
using VisibilityVector = Eigen::Matrix<int, kNumKeypoints, 1>;

/// Raised when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// OKS against a reference pose without any labeled keypoint.
class UndefinedSimilarity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed file contents (annotations, detections, tensors, boxes).
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace toppose
