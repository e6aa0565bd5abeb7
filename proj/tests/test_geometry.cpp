#include <doctest.h>

#include <random>

#include "support/generators.hpp"
#include "toppose/geometry.hpp"

using namespace toppose;

namespace {
constexpr double kRatio = 353.0 / 257.0;
}

TEST_CASE("fix_aspect extends the short side about the center") {
  const Boxd square{0, 0, 100, 100};
  const Boxd a = fix_aspect(square, kRatio);
  CHECK(a.width == 100);
  CHECK(a.height == doctest::Approx(100.0 * 353.0 / 257.0).epsilon(1e-12));
  CHECK(a.height == doctest::Approx(137.3540856).epsilon(1e-9));
  CHECK((a.center() - square.center()).norm() < 1e-9);

  const Boxd tall{10, 20, 100, 200};
  const Boxd b = fix_aspect(tall, kRatio);
  CHECK(b.height == 200);
  CHECK(b.width == doctest::Approx(200.0 * 257.0 / 353.0).epsilon(1e-12));
  CHECK(b.width == doctest::Approx(145.6090651).epsilon(1e-9));
  CHECK((b.center() - tall.center()).norm() < 1e-9);

  const Boxd exact{3, 4, 257, 353};
  CHECK(fix_aspect(exact, kRatio) == exact);
}

TEST_CASE("fix_aspect rejects degenerate input") {
  CHECK_THROWS_AS(fix_aspect(Boxd{0, 0, 0, 10}, kRatio), InvalidInput);
  CHECK_THROWS_AS(fix_aspect(Boxd{0, 0, 10, -1}, kRatio), InvalidInput);
  CHECK_THROWS_AS(fix_aspect(Boxd{0, 0, 10, 10}, 0.0), InvalidInput);
}

TEST_CASE("fix_aspect properties on random boxes") {
  gen::Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const Boxd b = gen::box(rng, 1000, 400, 1);
    const double ratio = gen::uniform(rng, 0.2, 5);
    const Boxd f = fix_aspect(b, ratio);
    CHECK(f.height / f.width == doctest::Approx(ratio).epsilon(1e-9));
    CHECK((f.center() - b.center()).norm() < 1e-9);
    CHECK(f.width >= b.width);
    CHECK(f.height >= b.height);
    CHECK((f.width == b.width || f.height == b.height));
    CHECK(fix_aspect(f, ratio) == f);
  }
}

TEST_CASE("rescale_box") {
  const Boxd b = box_from_center<double>({50, 60}, 100, 137.354);
  const Boxd r = rescale_box(b, 1.25);
  CHECK(r.width == doctest::Approx(125));
  CHECK(r.height == doctest::Approx(171.6925));
  CHECK((r.center() - b.center()).norm() < 1e-9);
  CHECK(rescale_box(b, 1.0) == b);

  const Boxd unit{-1, -1, 2, 2};
  const Boxd u = rescale_box(unit, 1.5);
  CHECK(u == Boxd{-1.5, -1.5, 3, 3});
  CHECK_THROWS_AS(rescale_box(b, 0.0), InvalidInput);
  CHECK_THROWS_AS(rescale_box(b, -2.0), InvalidInput);

  gen::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Boxd x = gen::box(rng, 500, 300);
    const double f = gen::uniform(rng, 0.1, 4);
    const Boxd y = rescale_box(x, f);
    CHECK(y.width / y.height == doctest::Approx(x.width / x.height).epsilon(1e-12));
    CHECK((y.center() - x.center()).norm() < 1e-9);
  }
}

TEST_CASE("make_crop_transform composes aspect fix and rescale") {
  const CropTransformd t = make_crop_transform(Boxd{0, 0, 100, 100}, 257, 353, 1.25);
  CHECK(t.source_box.width == doctest::Approx(125).epsilon(1e-12));
  CHECK(t.source_box.height == doctest::Approx(171.6926070).epsilon(1e-9));
  CHECK(t.scale == doctest::Approx(257.0 / 125.0).epsilon(1e-12));
  CHECK(t.scale == doctest::Approx(353.0 / t.source_box.height).epsilon(1e-9));
  CHECK(t.source_box.height / t.source_box.width == doctest::Approx(353.0 / 257.0).epsilon(1e-9));

  const Boxd exact{7, 9, 257, 353};
  const CropTransformd id = make_crop_transform(exact, 257, 353, 1.0);
  CHECK(id.scale == 1.0);
  CHECK(id.source_box == exact);

  CHECK_THROWS_AS(make_crop_transform(exact, 0, 353, 1.0), InvalidInput);
  CHECK_THROWS_AS(make_crop_transform(exact, 257, 353, 0.0), InvalidInput);
}

TEST_CASE("image_to_crop and crop_to_image are inverse") {
  gen::Rng rng(3);
  const CropTransformd t = make_crop_transform(Boxd{31.5, 12.25, 80, 190}, 257, 353, 1.25);
  CHECK((t.image_to_crop(t.source_box.origin())).norm() == 0);
  const Point<double> c = t.image_to_crop(t.source_box.center());
  CHECK(c.x() == doctest::Approx(257.0 / 2).epsilon(1e-12));
  CHECK(c.y() == doctest::Approx(353.0 / 2).epsilon(1e-12));
  for (int i = 0; i < 100; ++i) {
    const Point<double> p(gen::uniform(rng, -500, 500), gen::uniform(rng, -500, 500));
    CHECK((t.image_to_crop(t.crop_to_image(p)) - p).norm() < 1e-6);
    CHECK((t.crop_to_image(t.image_to_crop(p)) - p).norm() < 1e-6);
  }

  CropTransformd simple;
  simple.source_box = Boxd{0, 0, 10, 10};
  simple.scale = 2;
  const Point<double> q = simple.image_to_crop({10, 20});
  CHECK(q == Point<double>(20, 40));
}

TEST_CASE("iou") {
  const Boxd a{0, 0, 1, 1};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Boxd{5, 5, 1, 1}) == 0.0);
  CHECK(iou(a, Boxd{1, 0, 1, 1}) == 0.0);  // touching edges
  CHECK(iou(a, Boxd{0.5, 0, 1, 1}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  gen::Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const Boxd x = gen::box(rng), y = gen::box(rng);
    const double v = iou(x, y);
    CHECK(v >= 0);
    CHECK(v <= 1);
    CHECK(v == iou(y, x));
    CHECK(iou(x, x) == 1.0);
  }
}
