#include "toppose/fixture.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <random>

#include "toppose/rng.hpp"

namespace toppose {
namespace {

constexpr int kCellCols = 3;
constexpr int kCellRows = 2;
constexpr double kCellWidth = 450;
constexpr double kCellHeight = 500;
constexpr double kBoxPadding = 0.1;  // per side, fraction of the keypoint extent

// Upright frontal skeleton, unit height, x centered on zero.
const KeypointMatrix& skeleton_template() {
  static const KeypointMatrix t = [] {
    KeypointMatrix m;
    m << 0.00, 0.00,   //
        0.03, -0.02,   // left eye
        -0.03, -0.02,  //
        0.06, 0.00,    // left ear
        -0.06, 0.00,   //
        0.12, 0.13,    // left shoulder
        -0.12, 0.13,   //
        0.16, 0.31,    // left elbow
        -0.16, 0.31,   //
        0.17, 0.47,    // left wrist
        -0.17, 0.47,   //
        0.08, 0.49,    // left hip
        -0.08, 0.49,   //
        0.09, 0.74,    // left knee
        -0.09, 0.74,   //
        0.09, 0.98,    // left ankle
        -0.09, 0.98;
    return m;
  }();
  return t;
}

}  // namespace

AnnotationSet make_fixture(const FixtureOptions& options) {
  if (options.num_images < 0 || options.min_people < 0 ||
      options.max_people < options.min_people || options.max_people > kCellCols * kCellRows)
    throw InvalidInput("make_fixture: invalid people-per-image range");
  if (!(options.min_person_height > 0) ||
      options.max_person_height < options.min_person_height ||
      options.max_person_height * (1 + 2 * kBoxPadding) * 1.05 > kCellHeight)
    throw InvalidInput("make_fixture: invalid person height range");

  AnnotationSet set;
  std::int64_t next_annotation_id = 1;
  for (int n = 0; n < options.num_images; ++n) {
    const ImageId image_id = n + 1;
    Rng rng = make_rng(options.seed, {0xF1C7u, static_cast<std::uint64_t>(image_id)});
    set.images.push_back({image_id, static_cast<int>(kCellWidth * kCellCols),
                          static_cast<int>(kCellHeight * kCellRows)});

    std::uniform_int_distribution<int> people_dist(options.min_people, options.max_people);
    const int people = people_dist(rng);
    std::array<int, kCellCols * kCellRows> cells;
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);

    std::uniform_real_distribution<double> height_dist(options.min_person_height,
                                                       options.max_person_height);
    std::normal_distribution<double> wobble(0.0, 0.012);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int p = 0; p < people; ++p) {
      const double height = height_dist(rng);
      KeypointMatrix kp = skeleton_template();
      for (int k = 0; k < kNumKeypoints; ++k) {
        kp(k, 0) += wobble(rng);
        kp(k, 1) += wobble(rng);
      }
      kp *= height;

      const VisibilityVector visible = VisibilityVector::Constant(2);
      const Boxd extent = keypoint_extent(kp, visible);
      const double pad_x = kBoxPadding * extent.width;
      const double pad_y = kBoxPadding * extent.height;
      Boxd bbox{extent.x_min - pad_x, extent.y_min - pad_y, extent.width + 2 * pad_x,
                extent.height + 2 * pad_y, 1.0};

      // Random placement of the stored box inside its cell.
      const int cell = cells[static_cast<std::size_t>(p)];
      const double cell_x = (cell % kCellCols) * kCellWidth;
      const double cell_y = (cell / kCellCols) * kCellHeight;
      const double target_x = cell_x + unit(rng) * (kCellWidth - bbox.width);
      const double target_y = cell_y + unit(rng) * (kCellHeight - bbox.height);
      const Eigen::RowVector2d shift(target_x - bbox.x_min, target_y - bbox.y_min);
      kp.rowwise() += shift;
      bbox.x_min = target_x;
      bbox.y_min = target_y;

      Pose pose;
      pose.keypoints = kp;
      pose.visibility = visible;
      pose.area = 0.5 * bbox.area();
      pose.image_id = image_id;
      pose.bbox = bbox;
      set.annotations.push_back(pose);
      set.annotation_ids.push_back(next_annotation_id++);
    }
  }
  return set;
}

}  // namespace toppose
