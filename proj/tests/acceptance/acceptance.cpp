// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "toppose/decoder.hpp"
#include "toppose/fixture.hpp"
#include "toppose/nms.hpp"
#include "toppose/oracle.hpp"
#include "toppose/pipeline.hpp"
#include "toppose/targets.hpp"

using namespace toppose;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const AnnotationSet& standard_fixture() {
  static const AnnotationSet set = [] {
    const fs::path bundled = fs::path(TOPPOSE_DATA_DIR) / "fixture50.json";
    if (fs::exists(bundled)) return load_annotations(bundled);
    return make_fixture();
  }();
  return set;
}

bool relative_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

// 1
Outcome oracle_round_trip() {
  PipelineConfig c;
  c.threads = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineResult r = run_pipeline(c, standard_fixture());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {r.report.ap == 1.0 && r.report.ar == 1.0 && secs < 10.0,
          fmt("AP=%.6f AR=%.6f in %.2fs", r.report.ap, r.report.ar, secs)};
}

// 2
Outcome mass_conservation() {
  gen::Rng rng(2002);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = static_cast<int>(gen::uniform(rng, 4, 30));
    const int w = static_cast<int>(gen::uniform(rng, 4, 30));
    const int ch = static_cast<int>(gen::uniform(rng, 1, 4));
    HeatmapStack<double> heat(ch, h, w);
    OffsetStack<double> off(ch, h, w);
    for (int k = 0; k < ch; ++k)
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          heat[k](r, c) = gen::uniform(rng, 0, 1);
          off.dx[k](r, c) = gen::uniform(rng, 0, w - 1) - c;
          off.dy[k](r, c) = gen::uniform(rng, 0, h - 1) - r;
        }
    const double R = gen::uniform(rng, 1, 10);
    const ActivationMaps f = aggregate(heat, off, R);
    double sf = 0, sh = 0;
    for (int k = 0; k < ch; ++k) {
      sf += f[k].sum();
      sh += heat[k].sum();
    }
    const double expect = sh / (std::numbers::pi * R * R);
    worst = std::max(worst, std::abs(sf - expect) / expect);
  }
  return {worst <= 1e-6, fmt("max relative error %.3g", worst)};
}

// 3
Outcome delta_property() {
  Pose p;
  p.keypoints.row(4) << 30, 22;
  p.visibility(4) = 2;
  p.area = 1;
  CropTransformd t = make_crop_transform(Boxd{0, 0, 61, 83}, 61, 83, 1.0);
  const double cx = t.image_to_crop({30, 22}).x();
  const double cy = t.image_to_crop({30, 22}).y();
  const auto tensors = oracle_tensors<double>(p, t, 5.0);
  const ActivationMaps f = aggregate(tensors.heatmaps, tensors.offsets, 5.0);
  const double expect = oracle::lattice_disk_count(cx, cy, 5.0) / (25.0 * std::numbers::pi);
  long nonzero = 0;
  for (const auto& plane : f) nonzero += (plane != 0).count();
  const double peak = f[4].maxCoeff();
  const bool at_grid = cx == std::round(cx) && cy == std::round(cy);
  return {at_grid && nonzero == 1 && std::abs(peak - expect) <= 1e-9 &&
              std::abs(expect - 81.0 / (25.0 * std::numbers::pi)) <= 1e-12,
          fmt("peak %.12f, expected %.12f, %g nonzero", peak, expect, double(nonzero))};
}

// 4
Outcome rescoring_value() {
  gen::Rng rng(404);
  const CropTransformd t = make_crop_transform(Boxd{0, 0, 257, 353}, 257, 353, 1.0);
  double lo = 1e9, hi = -1e9, worst_scale = 0;
  bool same_argmax = true;
  for (int trial = 0; trial < 20; ++trial) {
    Pose p;
    for (int k = 0; k < kNumKeypoints; ++k) {
      p.keypoints(k, 0) = std::round(gen::uniform(rng, 30, 227));
      p.keypoints(k, 1) = std::round(gen::uniform(rng, 30, 323));
    }
    p.visibility.setConstant(2);
    p.area = 1;
    const auto tensors = oracle_tensors<double>(p, t, 25.0);
    const PoseDetection d = decode_crop(tensors.heatmaps, tensors.offsets, t, 25.0, Boxd{}, 0);
    lo = std::min(lo, d.score);
    hi = std::max(hi, d.score);
    const double a = gen::uniform(rng, 0.1, 10);
    auto scaled = tensors.heatmaps;
    for (auto& plane : scaled) plane *= a;
    const PoseDetection ds = decode_crop(scaled, tensors.offsets, t, 25.0, Boxd{}, 0);
    worst_scale = std::max(worst_scale, std::abs(ds.score - a * d.score) / (a * d.score));
    same_argmax = same_argmax && ds.keypoints == d.keypoints;
  }
  return {lo >= 0.99 && hi <= 1.02 && worst_scale <= 1e-9 && same_argmax,
          fmt("scores in [%.5f, %.5f], scaling error %.3g", lo, hi, worst_scale) +
              (same_argmax ? "" : ", argmax moved")};
}

// 5
Outcome oks_closed_form() {
  const KappaTable kap = coco_kappas();
  Pose g;
  g.visibility(0) = 2;
  g.area = 900;  // s = 30
  PoseDetection d;
  d.keypoints(0, 0) = 30 * kap(0) * std::numbers::sqrt2;
  const double single = oks(d, g);
  const double err1 = std::abs(single - std::exp(-1.0));

  gen::Rng rng(505);
  bool self_one = true;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Pose p = gen::pose(rng, 200, 200, gen::uniform(rng, 10, 100));
    p.area = gen::uniform(rng, 100, 20000);
    PoseDetection self;
    self.keypoints = p.keypoints;
    self_one = self_one && oks(self, p) == 1.0;
    const PoseDetection q = gen::detection_from(p, 1, gen::uniform(rng, 0, 15), rng);
    const double a = gen::uniform(rng, 0.2, 5);
    Pose ps = p;
    ps.keypoints *= a;
    ps.area *= a * a;
    PoseDetection qs = q;
    qs.keypoints *= a;
    worst = std::max(worst, std::abs(oks(qs, ps) - oks(q, p)));
  }
  return {err1 <= 1e-12 && self_one && worst <= 1e-12,
          fmt("|oks - 1/e| = %.3g, scale-invariance error %.3g", err1, worst)};
}

// 6
Outcome nms_equivalence() {
  gen::Rng rng(606);
  const KappaTable kap = coco_kappas();
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = static_cast<int>(gen::uniform(rng, 0, 30));
    const double thr = gen::uniform(rng, 0.05, 0.95);
    std::vector<Boxd> boxes;
    std::vector<PoseDetection> dets;
    std::vector<double> box_scores, det_scores;
    for (int i = 0; i < n; ++i) {
      Boxd b = gen::box(rng, 80, 50);
      if (i > 0 && gen::uniform(rng, 0, 1) < 0.1) b.score = boxes.back().score;  // ties
      boxes.push_back(b);
      box_scores.push_back(b.score);
      const Pose g = gen::pose(rng, gen::uniform(rng, 0, 150), 80, 40,
                               static_cast<ImageId>(gen::uniform(rng, 0, 3)));
      dets.push_back(gen::detection_from(g, b.score, gen::uniform(rng, 0, 6), rng));
      det_scores.push_back(b.score);
    }
    const auto eb = oracle::naive_nms(box_scores, thr, [&](std::size_t i, std::size_t j) {
      return oracle::box_iou(boxes[i], boxes[j]);
    });
    const auto eo = oracle::naive_nms(det_scores, thr, [&](std::size_t i, std::size_t j) {
      if (dets[i].image_id != dets[j].image_id) return 0.0;
      return oracle::det_det_oks(dets[i], dets[j], kap);
    });
    if (box_nms_indices(boxes, thr) != eb) ++mismatches;
    if (oks_nms_indices(dets, thr, kap) != eo) ++mismatches;
    if (box_nms_indices(boxes, 1.0).size() != boxes.size()) ++mismatches;
    if (oks_nms_indices(dets, 1.0, kap).size() != dets.size()) ++mismatches;
  }
  // exact duplicates collapse to the first of the highest score
  const Boxd b{10, 10, 40, 80, 0.8};
  const std::vector<Boxd> dup{b, b, b};
  const bool box_dup = box_nms_indices(dup) == std::vector<std::size_t>{0};
  gen::Rng r2(7);
  const PoseDetection d = gen::detection_from(gen::pose(r2, 50, 50, 30), 0.7, 0, r2);
  const std::vector<PoseDetection> ddup{d, d};
  const bool oks_dup = oks_nms_indices(ddup) == std::vector<std::size_t>{0};
  return {mismatches == 0 && box_dup && oks_dup,
          fmt("%g mismatches over 1000 instances", mismatches) +
              (box_dup && oks_dup ? "" : ", duplicate case failed")};
}

// 7
Outcome evaluator_equivalence() {
  gen::Rng rng(707);
  double worst = 0;
  auto diff = [](double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) == std::isnan(b) ? 0.0 : 1.0;
    return std::abs(a - b);
  };
  for (int trial = 0; trial < 200; ++trial) {
    const int images = static_cast<int>(gen::uniform(rng, 1, 6));
    const int ngt = static_cast<int>(gen::uniform(rng, 0, 5));
    const int ndet = static_cast<int>(gen::uniform(rng, 0, 7));
    std::vector<Pose> gts;
    for (int i = 0; i < ngt; ++i) {
      const auto img = static_cast<ImageId>(gen::uniform(rng, 0, images));
      Pose g = gen::pose(rng, gen::uniform(rng, 50, 250), 150, gen::uniform(rng, 20, 90), img);
      g.area = gen::uniform(rng, 300, 20000);
      for (int k = 0; k < kNumKeypoints; ++k)
        if (gen::uniform(rng, 0, 1) < 0.25) g.visibility(k) = gen::uniform(rng, 0, 1) < 0.5 ? 0 : 1;
      if (gen::uniform(rng, 0, 1) < 0.1) g.ignore = true;
      if (gen::uniform(rng, 0, 1) < 0.05) g.visibility.setZero();
      gts.push_back(g);
    }
    std::vector<PoseDetection> dets;
    for (int i = 0; i < ndet; ++i) {
      PoseDetection d;
      if (!gts.empty() && gen::uniform(rng, 0, 1) < 0.7) {
        const Pose& g = gts[static_cast<std::size_t>(gen::uniform(rng, 0, double(gts.size())))];
        d = gen::detection_from(g, 0, gen::uniform(rng, 0, 10), rng);
      } else {
        const auto img = static_cast<ImageId>(gen::uniform(rng, 0, images));
        d = gen::detection_from(gen::pose(rng, 150, 150, gen::uniform(rng, 5, 80), img), 0, 0, rng);
      }
      d.score = gen::uniform(rng, 0, 1) < 0.2 && !dets.empty() ? dets.back().score
                                                                : gen::uniform(rng, 0, 1);
      dets.push_back(d);
    }
    EvalParams params;
    params.max_dets = static_cast<int>(gen::uniform(rng, 1, 8));
    const EvalReport a = evaluate(dets, gts, params);
    const EvalReport b = oracle::naive_evaluate(dets, gts, params);
    for (auto [x, y] : {std::pair{a.ap, b.ap}, {a.ap50, b.ap50}, {a.ap75, b.ap75},
                        {a.ap_medium, b.ap_medium}, {a.ap_large, b.ap_large}, {a.ar, b.ar},
                        {a.ar50, b.ar50}, {a.ar75, b.ar75}, {a.ar_medium, b.ar_medium},
                        {a.ar_large, b.ar_large}})
      worst = std::max(worst, diff(x, y));
  }

  gen::Rng r2(8);
  std::vector<Pose> gts;
  std::vector<PoseDetection> perfect;
  for (ImageId img = 0; img < 3; ++img)
    for (int i = 0; i < 2; ++i) {
      Pose g = gen::pose(r2, 100 + 200 * i, 150, 50, img);
      g.area = 12000;
      gts.push_back(g);
      perfect.push_back(gen::detection_from(g, 0.5 + 0.1 * i, 0, r2));
    }
  const EvalReport full = evaluate(perfect, gts);
  const EvalReport none = evaluate({}, gts);
  const bool ends = full.ap == 1.0 && full.ar == 1.0 && none.ap == 0.0 && none.ar == 0.0;
  return {worst <= 1e-9 && ends, fmt("max deviation %.3g; perfect AP %.3f, empty AP %.3f", worst,
                                     full.ap, none.ap)};
}

// 8
Outcome rescoring_mechanism() {
  const AnnotationSet& set = standard_fixture();
  NoiseConfig corrupt;
  corrupt.heatmap_flip_prob = 0.3;
  corrupt.seed = 808;
  std::vector<PoseDetection> rescored, by_detector;
  std::uint64_t key = 0;
  int parity = 0;
  for (std::size_t i = 0; i < set.annotations.size(); ++i) {
    const Pose& g = set.annotations[i];
    Boxd box = ground_truth_box(g);
    box.score = 0.9;  // uninformative detector
    const CropTransformd t = make_crop_transform(box);
    const auto clean = oracle_tensors<float>(g, t);
    const auto noisy = perturb(clean, corrupt, key++);
    PoseDetection dc = decode_crop(clean.heatmaps, clean.offsets, t, kDefaultDiskRadius, box, g.image_id);
    PoseDetection dn = decode_crop(noisy.heatmaps, noisy.offsets, t, kDefaultDiskRadius, box, g.image_id);
    // Alternate which copy comes first so input order carries no signal.
    if (parity++ % 2) std::swap(dc, dn);
    for (const PoseDetection* d : {&dc, &dn}) {
      rescored.push_back(*d);
      PoseDetection flat = *d;
      flat.score = box.score;
      by_detector.push_back(flat);
    }
  }
  const double ap_rescore = evaluate(rescored, set.annotations).ap;
  const double ap_detector = evaluate(by_detector, set.annotations).ap;
  return {ap_rescore > ap_detector,
          fmt("AP rescore %.4f vs detector %.4f", ap_rescore, ap_detector)};
}

double mean_ap(PipelineConfig c, int seeds) {
  double sum = 0;
  for (int s = 0; s < seeds; ++s) {
    c.noise.seed = 900 + static_cast<std::uint64_t>(s);
    sum += run_pipeline(c, standard_fixture()).report.ap;
  }
  return sum / seeds;
}

// 9
Outcome noise_monotonicity() {
  std::vector<double> flip_ap, sigma_ap;
  PipelineConfig base;
  const double clean = run_pipeline(base, standard_fixture()).report.ap;
  flip_ap.push_back(clean);
  for (double p : {0.05, 0.1, 0.2}) {
    PipelineConfig c = base;
    c.noise.heatmap_flip_prob = p;
    flip_ap.push_back(mean_ap(c, 5));
  }
  sigma_ap.push_back(clean);
  for (double s : {2.0, 5.0, 10.0}) {
    PipelineConfig c = base;
    c.noise.offset_sigma = s;
    sigma_ap.push_back(mean_ap(c, 5));
  }
  bool ok = true;
  for (std::size_t i = 1; i < 4; ++i) ok = ok && flip_ap[i] <= flip_ap[i - 1] && sigma_ap[i] <= sigma_ap[i - 1];
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << "flip AP";
  for (double v : flip_ap) s << ' ' << v;
  s << "; sigma AP";
  for (double v : sigma_ap) s << ' ' << v;
  return {ok, s.str()};
}

// 10
Outcome oks_nms_sweep() {
  PipelineConfig c;
  c.noise.box_jitter = 0.25;
  c.noise.duplicate_rate = 3;
  c.noise.seed = 1010;
  const std::vector<double> values{0.1, 0.3, 0.5, 0.7, 0.9};
  const auto rows = sweep(c, standard_fixture(), "oks-nms", values, 1);
  const std::string csv = sweep_csv("oks-nms", rows);
  std::istringstream lines(csv);
  std::string line;
  int data_lines = -1;
  while (std::getline(lines, line)) ++data_lines;
  const bool shape = rows.size() == 5 && data_lines == 5;
  const double at5 = rows.size() == 5 ? rows[2].report.ap : 0;
  const double at9 = rows.size() == 5 ? rows[4].report.ap : 0;
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << "AP by threshold";
  for (const auto& r : rows) s << ' ' << r.report.ap;
  return {shape && at5 > at9, s.str()};
}

// 11
Outcome loss_functions() {
  gen::Rng rng(1111);
  double worst_fd = 0;
  for (int i = 0; i < 100; ++i) {
    const double u = gen::uniform(rng, 0.01, 5);
    const double h = 1e-6;
    const double fd = (huber(u + h) - huber(u - h)) / (2 * h);
    const double analytic = std::min(u, kDefaultHuberDelta);
    worst_fd = std::max(worst_fd, std::abs(fd - analytic));
  }
  HeatmapStack<double> pred(kNumKeypoints, 9, 7), target(kNumKeypoints, 9, 7);
  for (auto& p : pred) p.setConstant(0.5);
  for (int k = 0; k < kNumKeypoints; ++k)
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 7; ++c) target[k](r, c) = (r + c + k) % 3 == 0 ? 1.0 : 0.0;
  LossMask mask(kNumKeypoints, 9, 7);
  for (auto& m : mask) m.setConstant(true);
  const double hl = heatmap_loss(pred, target, mask);
  const double expect = 9.0 * 7.0 * kNumKeypoints * std::numbers::ln2;
  const double err_h = std::abs(hl - expect) / expect;
  double worst_w = 0;
  for (int i = 0; i < 100; ++i) {
    const double a = gen::uniform(rng, 0, 100), b = gen::uniform(rng, 0, 100);
    worst_w = std::max(worst_w, std::abs(total_loss(a, b) - (4 * a + b)));
  }
  return {worst_fd <= 1e-6 && err_h <= 1e-9 && worst_w == 0,
          fmt("huber FD error %.3g, heatmap loss rel error %.3g, weighting error %.3g", worst_fd,
              err_h, worst_w)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 12
Outcome determinism() {
  PipelineConfig c;
  c.noise.heatmap_flip_prob = 0.05;
  c.noise.offset_sigma = 2;
  c.noise.box_jitter = 0.1;
  c.noise.duplicate_rate = 1;
  c.noise.seed = 1212;
  c.threads = 2;
  const fs::path base = fs::temp_directory_path() / "toppose_acceptance_determinism";
  fs::remove_all(base);
  write_artifacts(run_pipeline(c, standard_fixture()), base / "a");
  write_artifacts(run_pipeline(c, standard_fixture()), base / "b");
  bool same = true;
  for (const char* f : {"detections.json", "report.txt", "report.csv"}) {
    const std::string a = slurp(base / "a" / f);
    same = same && !a.empty() && a == slurp(base / "b" / f);
  }
  return {same, same ? "artifacts byte-identical" : "artifacts differ"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle round trip: AP = AR = 1 under 10 s", oracle_round_trip},
      {"vote mass conservation", mass_conservation},
      {"single-point vote collapse", delta_property},
      {"rescoring value and heatmap scaling", rescoring_value},
      {"OKS closed form and invariances", oks_closed_form},
      {"NMS oracle equivalence", nms_equivalence},
      {"evaluator oracle equivalence", evaluator_equivalence},
      {"rescoring beats uninformative detector scores", rescoring_mechanism},
      {"AP non-increasing in noise", noise_monotonicity},
      {"OKS-NMS threshold sweep", oks_nms_sweep},
      {"loss functions", loss_functions},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
