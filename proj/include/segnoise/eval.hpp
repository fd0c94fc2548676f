#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "segnoise/coco_io.hpp"

namespace segnoise {

inline constexpr int kNumThresholds = 10;
inline constexpr int kNumRanges = 4; // all, small, medium, large

// (50 + 5*i) / 100.0 for i in [0, 10).
double iou_threshold(int i);

extern const char* const kRangeNames[kNumRanges];

struct EvalCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
};

// Metric index 0 is plain mask IoU, 1 is boundary-band IoU.
struct EvalReport {
  std::vector<double> thresholds;
  std::vector<long long> category_ids;
  // Mean AP over categories that have ground truth in the range; -1 when no
  // category qualifies.
  double ap[2][kNumThresholds][kNumRanges] = {};
  EvalCounts counts[2][kNumThresholds][kNumRanges] = {};
  // Per-category AP and counts at range "all"; AP is -1 for categories with
  // no ground truth.
  std::vector<double> ap_cat[2][kNumThresholds];
  std::vector<EvalCounts> counts_cat[2][kNumThresholds];
  // Mean over thresholds per (metric, range); -1 when every threshold lacked
  // ground truth.
  double map_by_range[2][kNumRanges] = {};
  double map_mask = -1.0;     // map_by_range[0][0]
  double map_boundary = -1.0; // map_by_range[1][0]
  double ap_small = -1.0;     // mask metric, mean over thresholds
  double ap_medium = -1.0;
  double ap_large = -1.0;
  int band_width = 0; // 0 means the per-image default was used
};

// COCO-convention matching of one annotation set against another. Scores are
// implicit and equal, so predictions are processed in ascending id order;
// crowd annotations on either side are excluded. band_width <= 0 selects the
// per-image default band.
EvalReport evaluate_ann_vs_ann(const Dataset& truth, const Dataset& pred, int band_width = 0,
                               unsigned workers = 1);

// CSV with header metric,threshold,scope,ap,tp,fp,fn and one row per
// (metric, threshold) x (all | small | medium | large | cat:<id>).
std::string report_csv(const EvalReport& r);

ordered_json report_json(const EvalReport& r);

// One image-category cell of greedy matching, exposed for equivalence tests.
// iou is indexed [pred][gt]; rows of gts must already be ordered
// non-ignored-first. Returns the matched gt index per pred, -1 if unmatched.
std::vector<int> greedy_match_cell(const std::vector<std::vector<double>>& iou,
                                   const std::vector<char>& gt_ignore, double threshold);

// 101-point interpolated AP from per-retained-prediction hit flags (already
// ordered by descending score) against n_gt non-ignored ground truths.
// Returns -1 when n_gt is zero.
double interpolated_ap(const std::vector<char>& is_tp, long long n_gt);

} // namespace segnoise
