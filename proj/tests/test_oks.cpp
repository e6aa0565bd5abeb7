#include <doctest.h>

#include <cmath>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "toppose/oks.hpp"

using namespace toppose;

namespace {

PoseDetection as_detection(const Pose& p) {
  PoseDetection d;
  d.keypoints = p.keypoints;
  d.image_id = p.image_id;
  return d;
}

}  // namespace

TEST_CASE("oks: identical keypoints give exactly one") {
  gen::Rng rng(1);
  const Pose g = gen::pose(rng, 50, 50, 30);
  CHECK(oks(as_detection(g), g) == 1.0);
}

TEST_CASE("oks: single displaced keypoint") {
  Pose g;
  g.area = 100;
  g.visibility(0) = 2;
  PoseDetection d;
  d.keypoints(0, 0) = 3;
  d.keypoints(0, 1) = 4;
  const double kappa = coco_kappas()(0);
  CHECK(oks(d, g) == doctest::Approx(std::exp(-25.0 / (2 * 100 * kappa * kappa))).epsilon(1e-14));
}

TEST_CASE("oks: only labeled keypoints count") {
  Pose g;
  g.area = 400;
  g.visibility(3) = 1;
  g.visibility(9) = 2;
  PoseDetection d;
  d.keypoints(3, 0) = 0;    // exact
  d.keypoints(9, 0) = 1e6;  // hopeless
  d.keypoints(12, 0) = 1e6;  // unlabeled, ignored
  CHECK(oks(d, g) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("oks: failures") {
  Pose g;
  g.area = 100;
  PoseDetection d;
  CHECK_THROWS_AS(oks(d, g), UndefinedSimilarity);
  g.visibility(0) = 2;
  g.area = 0;
  CHECK_THROWS_AS(oks(d, g), InvalidInput);
  KappaTable bad = coco_kappas();
  bad(4) = 0;
  CHECK_THROWS_AS(validate_kappas(bad), InvalidInput);
  bad(4) = std::nan("");
  CHECK_THROWS_AS(validate_kappas(bad), InvalidInput);
  CHECK_NOTHROW(validate_kappas(coco_kappas()));
}

TEST_CASE("oks: matches scalar oracle, bounded, monotone in distance") {
  gen::Rng rng(12);
  const KappaTable kap = coco_kappas();
  for (int trial = 0; trial < 200; ++trial) {
    Pose g = gen::pose(rng, 100, 100, gen::uniform(rng, 10, 80));
    for (int k = 0; k < kNumKeypoints; ++k)
      g.visibility(k) = gen::uniform(rng, 0, 1) < 0.3 ? 0 : 2;
    if (g.num_labeled() == 0) g.visibility(0) = 2;
    g.area = gen::uniform(rng, 50, 5000);
    const PoseDetection d = gen::detection_from(g, 1, gen::uniform(rng, 0, 20), rng);
    const double v = oks(d, g, kap);
    CHECK(v == doctest::Approx(oracle::det_gt_oks(d, g, kap)).epsilon(1e-12));
    CHECK(v >= 0);
    CHECK(v <= 1);

    // pushing every keypoint further away never increases similarity
    PoseDetection far = d;
    far.keypoints = g.keypoints + 2.0 * (d.keypoints - g.keypoints);
    CHECK(oks(far, g, kap) <= v + 1e-15);
  }
}

TEST_CASE("oks between detections uses the reference box scale") {
  gen::Rng rng(5);
  const KappaTable kap = coco_kappas();
  for (int trial = 0; trial < 50; ++trial) {
    const Pose g = gen::pose(rng, 80, 80, 40);
    const PoseDetection a = gen::detection_from(g, 0.9, 3, rng);
    const PoseDetection b = gen::detection_from(g, 0.8, 3, rng);
    CHECK(oks_between_detections(b, a, kap) ==
          doctest::Approx(oracle::det_det_oks(b, a, kap)).epsilon(1e-12));
    CHECK(oks_between_detections(a, a, kap) == 1.0);
  }
}
