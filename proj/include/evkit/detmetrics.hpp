#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evkit/codec.hpp"

namespace evkit {

struct EvalConfig {
  /// Strictly increasing in (0, 1]. Default 0.50:0.05:0.95.
  std::vector<double> iou_thresholds;
  /// Default 0.00:0.01:1.00.
  std::vector<double> recall_grid;
  /// Classes to evaluate; empty means every class seen in the ground truth.
  std::vector<std::uint8_t> classes;
  /// Boxes with diagonal below this many pixels are dropped from both sides.
  std::optional<double> min_box_diagonal;
  /// Boxes with t < this are dropped from both sides.
  std::optional<Micros> skip_before_us;
  /// A prediction at time t joins the nearest ground-truth frame within this
  /// many microseconds; otherwise it forms its own frame (all false positives).
  Micros time_tolerance_us = 0;

  static EvalConfig coco();
};

/// Throws ConfigError on bad thresholds or recall grid.
void validate(const EvalConfig& cfg);

/// Axis-aligned intersection over union; 0 when the union is empty.
double iou(const AnnotatedBox& a, const AnnotatedBox& b);

/// Greedy matching result for one frame at one IoU threshold.
struct MatchResult {
  /// Prediction indices in matching order (score descending, stable).
  std::vector<std::size_t> order;
  /// Per prediction (input indexing): matched gt index, if any.
  std::vector<std::optional<std::size_t>> pred_match;
  /// Per prediction: IoU with its matched gt, 0 when unmatched.
  std::vector<double> pred_iou;
  /// Per gt: whether some prediction took it.
  std::vector<bool> gt_matched;

  std::size_t true_positives() const;
  std::size_t false_positives() const;
  std::size_t false_negatives() const;
};

/// Predictions visited by descending score (ties in input order); each takes
/// the unmatched same-class gt with the highest IoU >= threshold (ties to the
/// lower gt index). Remaining predictions are false positives.
MatchResult match_frame(std::span<const AnnotatedBox> preds, std::span<const AnnotatedBox> gts,
                        double iou_threshold);

/// One scored detection after matching, the unit of PR accumulation.
struct ScoredMatch {
  float score = 0.0F;
  bool true_positive = false;
};

/// COCO 101-point interpolated AP. `detections` must be in evaluation order
/// (frame order, then score descending within the frame); they are stably
/// re-sorted by score. Returns 0 when num_gt > 0 and there are no detections;
/// std::nullopt when num_gt == 0 (class excluded from averaging).
std::optional<double> average_precision(std::span<const ScoredMatch> detections, std::size_t num_gt,
                                        std::span<const double> recall_grid);

struct EvalReport {
  double map = 0.0;
  double map50 = 0.0;
  double map75 = 0.0;
  /// Per class: AP averaged over thresholds.
  std::map<std::uint8_t, double> per_class;
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;
};

/// Throws NoGroundTruth if no ground-truth box survives filtering.
EvalReport evaluate(std::span<const AnnotatedBox> predictions, std::span<const AnnotatedBox> ground_truth,
                    const EvalConfig& cfg);

/// Fixed key order: mAP, mAP50, mAP75, num_gt, num_pred, then AP[class=k] by class.
std::string format_report(const EvalReport& report);

}  // namespace evkit
