#include "evkit/detmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "evkit/error.hpp"

namespace evkit {

EvalConfig EvalConfig::coco() {
  EvalConfig cfg;
  for (int i = 0; i < 10; ++i) cfg.iou_thresholds.push_back((50.0 + 5.0 * i) / 100.0);
  for (int i = 0; i <= 100; ++i) cfg.recall_grid.push_back(i / 100.0);
  return cfg;
}

void validate(const EvalConfig& cfg) {
  if (cfg.iou_thresholds.empty()) {
    throw Error(ErrorCode::ConfigError, "at least one IoU threshold is required");
  }
  for (std::size_t i = 0; i < cfg.iou_thresholds.size(); ++i) {
    const double t = cfg.iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0) || (i > 0 && !(t > cfg.iou_thresholds[i - 1]))) {
      throw Error(ErrorCode::ConfigError,
                  "IoU thresholds must be strictly increasing within (0, 1]");
    }
  }
  if (cfg.recall_grid.empty()) {
    throw Error(ErrorCode::ConfigError, "recall grid must not be empty");
  }
}

double iou(const AnnotatedBox& a, const AnnotatedBox& b) {
  const double ix = std::max(0.0, std::min<double>(a.x + a.w, b.x + b.w) - std::max<double>(a.x, b.x));
  const double iy = std::max(0.0, std::min<double>(a.y + a.h, b.y + b.h) - std::max<double>(a.y, b.y));
  const double inter = ix * iy;
  const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::size_t MatchResult::true_positives() const {
  return static_cast<std::size_t>(
      std::count_if(pred_match.begin(), pred_match.end(), [](const auto& m) { return m.has_value(); }));
}

std::size_t MatchResult::false_positives() const { return pred_match.size() - true_positives(); }

std::size_t MatchResult::false_negatives() const {
  return static_cast<std::size_t>(std::count(gt_matched.begin(), gt_matched.end(), false));
}

MatchResult match_frame(std::span<const AnnotatedBox> preds, std::span<const AnnotatedBox> gts,
                        double iou_threshold) {
  MatchResult r;
  r.order.resize(preds.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  r.pred_match.assign(preds.size(), std::nullopt);
  r.pred_iou.assign(preds.size(), 0.0);
  r.gt_matched.assign(gts.size(), false);

  for (const std::size_t pi : r.order) {
    const AnnotatedBox& p = preds[pi];
    double best = iou_threshold;
    std::optional<std::size_t> best_gt;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (r.gt_matched[gi] || gts[gi].class_id != p.class_id) continue;
      const double v = iou(p, gts[gi]);
      if (v >= best && (!best_gt || v > best)) {
        best = v;
        best_gt = gi;
      }
    }
    if (best_gt) {
      r.gt_matched[*best_gt] = true;
      r.pred_match[pi] = best_gt;
      r.pred_iou[pi] = best;
    }
  }
  return r;
}

std::optional<double> average_precision(std::span<const ScoredMatch> detections, std::size_t num_gt,
                                        std::span<const double> recall_grid) {
  if (num_gt == 0) return std::nullopt;
  if (detections.empty() || recall_grid.empty()) return 0.0;

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  const std::size_t n = order.size();
  std::vector<double> recall(n);
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (detections[order[k]].true_positive) ++tp;
    recall[k] = static_cast<double>(tp) / static_cast<double>(num_gt);
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  for (std::size_t k = n - 1; k > 0; --k) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double sum = 0.0;
  for (const double r : recall_grid) {
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / static_cast<double>(recall_grid.size());
}

namespace {

bool keep_box(const AnnotatedBox& b, const EvalConfig& cfg) {
  if (cfg.skip_before_us && b.t < *cfg.skip_before_us) return false;
  if (cfg.min_box_diagonal) {
    const double diag = std::hypot(static_cast<double>(b.w), static_cast<double>(b.h));
    if (diag < *cfg.min_box_diagonal) return false;
  }
  return true;
}

struct Frame {
  std::vector<AnnotatedBox> preds;
  std::vector<AnnotatedBox> gts;
};

/// Frames keyed by gt timestamp; unmatched prediction times get their own key.
std::map<Micros, Frame> group_frames(std::span<const AnnotatedBox> preds,
                                     std::span<const AnnotatedBox> gts, const EvalConfig& cfg) {
  std::map<Micros, Frame> frames;
  for (const auto& g : gts) {
    if (keep_box(g, cfg)) frames[g.t].gts.push_back(g);
  }
  std::vector<Micros> gt_times;
  for (const auto& [t, f] : frames) gt_times.push_back(t);

  for (const auto& p : preds) {
    if (!keep_box(p, cfg)) continue;
    Micros key = p.t;
    const auto it = std::lower_bound(gt_times.begin(), gt_times.end(), p.t);
    std::optional<Micros> best;
    if (it != gt_times.end() && *it - p.t <= cfg.time_tolerance_us) best = *it;
    if (it != gt_times.begin()) {
      const Micros before = *std::prev(it);
      if (p.t - before <= cfg.time_tolerance_us && (!best || p.t - before <= *best - p.t)) {
        best = before;
      }
    }
    if (best) key = *best;
    frames[key].preds.push_back(p);
  }
  return frames;
}

std::vector<AnnotatedBox> of_class(std::span<const AnnotatedBox> boxes, std::uint8_t cls) {
  std::vector<AnnotatedBox> out;
  for (const auto& b : boxes) {
    if (b.class_id == cls) out.push_back(b);
  }
  return out;
}

}  // namespace

EvalReport evaluate(std::span<const AnnotatedBox> predictions,
                    std::span<const AnnotatedBox> ground_truth, const EvalConfig& cfg) {
  validate(cfg);
  const auto frames = group_frames(predictions, ground_truth, cfg);

  EvalReport report;
  std::vector<std::uint8_t> classes = cfg.classes;
  for (const auto& [t, f] : frames) {
    report.num_gt += f.gts.size();
    report.num_pred += f.preds.size();
    if (cfg.classes.empty()) {
      for (const auto& g : f.gts) classes.push_back(g.class_id);
    }
  }
  if (report.num_gt == 0) {
    throw Error(ErrorCode::NoGroundTruth, "no ground-truth boxes left after filtering");
  }
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  std::vector<double> thresholds = cfg.iou_thresholds;
  const auto threshold_index = [&](double t) {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (std::abs(thresholds[i] - t) < 1e-12) return i;
    }
    thresholds.push_back(t);
    return thresholds.size() - 1;
  };
  const std::size_t n_main = cfg.iou_thresholds.size();
  const std::size_t i50 = threshold_index(0.5);
  const std::size_t i75 = threshold_index(0.75);

  double sum_all = 0.0;
  double sum50 = 0.0;
  double sum75 = 0.0;
  std::size_t counted = 0;
  for (const std::uint8_t cls : classes) {
    std::vector<std::vector<ScoredMatch>> per_threshold(thresholds.size());
    std::size_t num_gt = 0;
    for (const auto& [t, f] : frames) {
      const auto preds = of_class(f.preds, cls);
      const auto gts = of_class(f.gts, cls);
      num_gt += gts.size();
      for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
        const MatchResult m = match_frame(preds, gts, thresholds[ti]);
        for (const std::size_t pi : m.order) {
          per_threshold[ti].push_back({preds[pi].score, m.pred_match[pi].has_value()});
        }
      }
    }
    if (num_gt == 0) continue;
    std::vector<double> ap(thresholds.size());
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
      ap[ti] = *average_precision(per_threshold[ti], num_gt, cfg.recall_grid);
    }
    const double mean = std::accumulate(ap.begin(), ap.begin() + static_cast<std::ptrdiff_t>(n_main), 0.0) /
                        static_cast<double>(n_main);
    report.per_class[cls] = mean;
    sum_all += mean;
    sum50 += ap[i50];
    sum75 += ap[i75];
    ++counted;
  }
  if (counted > 0) {
    report.map = sum_all / static_cast<double>(counted);
    report.map50 = sum50 / static_cast<double>(counted);
    report.map75 = sum75 / static_cast<double>(counted);
  }
  return report;
}

std::string format_report(const EvalReport& r) {
  std::string s = fmt::format("mAP={:.6f}\nmAP50={:.6f}\nmAP75={:.6f}\nnum_gt={}\nnum_pred={}\n", r.map,
                              r.map50, r.map75, r.num_gt, r.num_pred);
  for (const auto& [cls, ap] : r.per_class) {
    s += fmt::format("AP[class={}]={:.6f}\n", static_cast<unsigned>(cls), ap);
  }
  return s;
}

}  // namespace evkit
