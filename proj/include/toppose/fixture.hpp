#pragma once

#include <cstdint>

#include "toppose/annotations.hpp"

namespace toppose {

struct FixtureOptions {
  int num_images = 50;
  int min_people = 1;
  int max_people = 6;
  double min_person_height = 110;  // image px
  double max_person_height = 380;
  std::uint64_t seed = 2017;
};

/// Synthetic people laid out on a 3x2 grid of non-overlapping cells. Every
/// keypoint is labeled (v = 2); stored boxes pad the keypoint extent by 10%
/// so that radius-25 disks stay inside default crops taken from them.
AnnotationSet make_fixture(const FixtureOptions& options = {});

}  // namespace toppose
