#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toppose/pose.hpp"

namespace toppose {

struct ImageInfo {
  ImageId id = 0;
  int width = 0;
  int height = 0;
};

struct Category {
  std::int64_t id = 1;
  std::string name = "person";
};

/// Person keypoint annotations in COCO layout.
struct AnnotationSet {
  std::vector<ImageInfo> images;
  std::vector<Pose> annotations;
  std::vector<std::int64_t> annotation_ids;  // parallel to annotations
  std::vector<Category> categories{Category{}};

  /// Annotations of one image, in file order.
  std::vector<Pose> poses_for(ImageId image_id) const;
};

/// Reads a COCO keypoint annotation file. Only annotations of the person
/// category are kept; crowd annotations and those without labeled keypoints
/// are flagged ignore. Throws SchemaError naming the offending record.
AnnotationSet load_annotations(const std::filesystem::path& path);
AnnotationSet parse_annotations(const std::string& json_text);
void save_annotations(const AnnotationSet& set, const std::filesystem::path& path);

/// COCO keypoint results: image_id, category_id = 1, 51 keypoint numbers
/// (x, y, keypoint score), score, plus the proposal box as bbox.
std::vector<PoseDetection> load_detections(const std::filesystem::path& path);
std::vector<PoseDetection> parse_detections(const std::string& json_text);
void write_detections(std::span<const PoseDetection> dets, const std::filesystem::path& path);
std::string detections_to_json(std::span<const PoseDetection> dets);

struct BoxRecord {
  ImageId image_id = 0;
  Boxd box;
};

/// COCO bbox results: image_id, category_id, bbox [x, y, w, h], score.
std::vector<BoxRecord> load_boxes(const std::filesystem::path& path);
void write_boxes(std::span<const BoxRecord> boxes, const std::filesystem::path& path);

}  // namespace toppose
