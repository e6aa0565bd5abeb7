#include "toppose/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace toppose {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Detections of one image (score-sorted, truncated to max_dets) and its
// ground truths, with the OKS matrix computed once for all cells.
struct ImageEntry {
  std::vector<std::size_t> det_index;  // into the caller's detection span
  std::vector<const PoseDetection*> dets;
  std::vector<const Pose*> gts;
  Eigen::MatrixXd similarity;  // dets x gts, NaN when undefined
  std::vector<double> det_area;
};

Eigen::MatrixXd similarity_matrix(std::span<const PoseDetection* const> dets,
                                  std::span<const Pose* const> gts, const KappaTable& kappas) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dets.size()), static_cast<Eigen::Index>(gts.size()));
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const bool defined = gts[g]->num_labeled() > 0 && gts[g]->area > 0;
    for (std::size_t d = 0; d < dets.size(); ++d)
      m(d, g) = defined ? oks(*dets[d], *gts[g], kappas) : kNaN;
  }
  return m;
}

ImageMatch greedy_match(const Eigen::MatrixXd& similarity, const std::vector<bool>& gt_ignore,
                        double threshold) {
  const auto num_dets = static_cast<std::size_t>(similarity.rows());
  const auto num_gts = static_cast<std::size_t>(similarity.cols());
  ImageMatch out{std::vector<int>(num_dets, -1), std::vector<bool>(num_dets, false),
                 std::vector<bool>(num_gts, false)};
  for (std::size_t d = 0; d < num_dets; ++d) {
    int best = -1;
    double best_oks = 0;
    bool best_ignored = true;
    for (std::size_t g = 0; g < num_gts; ++g) {
      if (out.gt_matched[g]) continue;
      const double o = similarity(d, g);
      if (std::isnan(o) || o < threshold) continue;
      const bool ignored = gt_ignore[g];
      const bool better = best < 0 || (best_ignored && !ignored) ||
                          (ignored == best_ignored && o > best_oks);
      if (better) {
        best = static_cast<int>(g);
        best_oks = o;
        best_ignored = ignored;
      }
    }
    if (best < 0) continue;
    out.det_to_gt[d] = best;
    out.det_ignore[d] = gt_ignore[static_cast<std::size_t>(best)];
    out.gt_matched[static_cast<std::size_t>(best)] = true;
  }
  return out;
}

std::vector<bool> default_ignore(std::span<const Pose* const> gts) {
  std::vector<bool> ignore(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g)
    ignore[g] = gts[g]->ignore || gts[g]->num_labeled() == 0;
  return ignore;
}

std::vector<ImageEntry> group_by_image(std::span<const PoseDetection> dets,
                                       std::span<const Pose> gts, const EvalParams& params) {
  std::map<ImageId, ImageEntry> by_image;
  for (std::size_t i = 0; i < dets.size(); ++i) by_image[dets[i].image_id].det_index.push_back(i);
  for (const Pose& g : gts) by_image[g.image_id].gts.push_back(&g);

  std::vector<ImageEntry> out;
  out.reserve(by_image.size());
  for (auto& [id, entry] : by_image) {
    auto& idx = entry.det_index;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    if (params.max_dets >= 0 && idx.size() > static_cast<std::size_t>(params.max_dets))
      idx.resize(static_cast<std::size_t>(params.max_dets));
    for (std::size_t i : idx) {
      entry.dets.push_back(&dets[i]);
      entry.det_area.push_back(detection_area(dets[i]));
    }
    entry.similarity = similarity_matrix(entry.dets, entry.gts, params.kappas);
    out.push_back(std::move(entry));
  }
  return out;
}

struct ScoredDetection {
  double score;
  ImageId image_id;
  std::size_t input_index;
  bool true_positive;
};

EvalCell accumulate_cell(const std::vector<ImageEntry>& images, double threshold,
                         const AreaRange& area, const EvalParams& params) {
  std::vector<ScoredDetection> scored;
  std::size_t positives = 0;
  for (const ImageEntry& image : images) {
    std::vector<bool> gt_ignore = default_ignore(image.gts);
    for (std::size_t g = 0; g < image.gts.size(); ++g)
      if (!area.contains(image.gts[g]->area)) gt_ignore[g] = true;
    positives += static_cast<std::size_t>(std::count(gt_ignore.begin(), gt_ignore.end(), false));

    const ImageMatch match = greedy_match(image.similarity, gt_ignore, threshold);
    for (std::size_t d = 0; d < image.dets.size(); ++d) {
      const bool matched = match.det_to_gt[d] >= 0;
      if (match.det_ignore[d]) continue;
      if (!matched && !area.contains(image.det_area[d])) continue;
      scored.push_back({image.dets[d]->score, image.dets[d]->image_id, image.det_index[d], matched});
    }
  }
  if (positives == 0) return {};

  std::sort(scored.begin(), scored.end(), [](const ScoredDetection& a, const ScoredDetection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return a.input_index < b.input_index;
  });

  const std::size_t n = scored.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += scored[i].true_positive ? 1 : 0;
    recall[i] = static_cast<double>(tp) / static_cast<double>(positives);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  const int points = params.recall_points;
  double sum = 0;
  for (int r = 0; r < points; ++r) {
    const double level = points > 1 ? static_cast<double>(r) / (points - 1) : 0.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return {sum / points, n ? recall.back() : 0.0};
}

double nan_mean(const std::vector<double>& values) {
  double sum = 0;
  int count = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++count;
  }
  return count ? sum / count : kNaN;
}

}  // namespace

std::vector<double> EvalParams::default_oks_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

ImageMatch match_image(std::span<const PoseDetection> dets, std::span<const Pose> gts,
                       const std::vector<bool>& gt_ignore, double oks_threshold,
                       const KappaTable& kappas) {
  if (gt_ignore.size() != gts.size())
    throw InvalidInput("match_image: one ignore flag per ground truth required");
  std::vector<const PoseDetection*> d;
  for (const auto& det : dets) d.push_back(&det);
  std::vector<const Pose*> g;
  for (const auto& gt : gts) g.push_back(&gt);
  return greedy_match(similarity_matrix(d, g, kappas), gt_ignore, oks_threshold);
}

ImageMatch match_image(std::span<const PoseDetection> dets, std::span<const Pose> gts,
                       double oks_threshold, const KappaTable& kappas) {
  std::vector<const Pose*> g;
  for (const auto& gt : gts) g.push_back(&gt);
  return match_image(dets, gts, default_ignore(g), oks_threshold, kappas);
}

double detection_area(const PoseDetection& det) {
  const auto lo = det.keypoints.colwise().minCoeff();
  const auto hi = det.keypoints.colwise().maxCoeff();
  return (hi(0) - lo(0)) * (hi(1) - lo(1));
}

EvalCell evaluate_cell(std::span<const PoseDetection> dets, std::span<const Pose> gts,
                       double oks_threshold, const AreaRange& area, const EvalParams& params) {
  return accumulate_cell(group_by_image(dets, gts, params), oks_threshold, area, params);
}

EvalReport evaluate(std::span<const PoseDetection> dets, std::span<const Pose> gts,
                    const EvalParams& params) {
  validate_kappas(params.kappas);
  if (params.recall_points < 1) throw InvalidInput("evaluate: recall_points must be positive");
  const auto images = group_by_image(dets, gts, params);
  const auto& thresholds = params.oks_thresholds;

  std::vector<double> ap_all, ar_all, ap_m, ar_m, ap_l, ar_l;
  for (double t : thresholds) {
    const EvalCell all = accumulate_cell(images, t, params.all, params);
    const EvalCell med = accumulate_cell(images, t, params.medium, params);
    const EvalCell lrg = accumulate_cell(images, t, params.large, params);
    ap_all.push_back(all.ap);
    ar_all.push_back(all.recall);
    ap_m.push_back(med.ap);
    ar_m.push_back(med.recall);
    ap_l.push_back(lrg.ap);
    ar_l.push_back(lrg.recall);
  }
  auto at = [&](const std::vector<double>& v, double t) {
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (std::abs(thresholds[i] - t) < 1e-9) return v[i];
    return kNaN;
  };

  EvalReport r;
  r.ap = nan_mean(ap_all);
  r.ap50 = at(ap_all, 0.5);
  r.ap75 = at(ap_all, 0.75);
  r.ap_medium = nan_mean(ap_m);
  r.ap_large = nan_mean(ap_l);
  r.ar = nan_mean(ar_all);
  r.ar50 = at(ar_all, 0.5);
  r.ar75 = at(ar_all, 0.75);
  r.ar_medium = nan_mean(ar_m);
  r.ar_large = nan_mean(ar_l);
  return r;
}

}  // namespace toppose
