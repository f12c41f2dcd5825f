#pragma once

#include <optional>
#include <vector>

#include "mbocc/grid.hpp"

namespace mbocc {

struct MatchCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
};

struct PRCurve {
    std::vector<Real> thresholds;
    std::vector<Real> precision;
    std::vector<Real> recall;
    Real average_precision = 0.0;
};

struct StratifiedBin {
    Real lo = 0.0, hi = 0.0;       // distance range [lo, hi)
    std::size_t count = 0;
    std::optional<Real> fpr;       // absent when the bin has no negatives
    Real accuracy = 0.0;
};

// F1 of pred binarized at 0.5 against a binary ground truth. Returns 1 when
// both sides are empty.
Real f1_occ(const ScalarMap& pred, const ScalarMap& gt);

// One-to-one greedy matching of predicted boundary pixels to ground-truth
// boundary pixels within Euclidean distance tol, nearest pairs first.
// Unmatched predictions count as FP, unmatched ground truth as FN.
MatchCounts boundary_match(const ScalarMap& pred_bin, const ScalarMap& gt_bin, Real tol);

// BSDS-style default matching tolerance for a given grid.
Real default_match_tol(int width, int height);

// Boundary average precision. The score map is thinned by non-maximum
// suppression along the gradient of its rank transform (so the whole curve is
// invariant under strictly monotone rescaling of the scores), then swept over
// up to n_thresholds score levels chosen rank-uniformly among the distinct
// surviving scores. Returns nullopt when the ground truth is empty.
std::optional<PRCurve> map_mb(const ScalarMap& pred, const ScalarMap& gt, Real tol,
                              int n_thresholds = 25);

// Exact Euclidean distance to the nearest source pixel (source = pixels with
// value >= 0.5), two-pass dimensional algorithm. An empty source yields the
// grid diagonal everywhere.
ScalarMap distance_transform(const ScalarMap& source);

// NMS thinning used by map_mb, exposed for tests: keeps local maxima of the
// rank transform along the quantized gradient axis (flat pixels are kept).
std::vector<std::uint8_t> nms_thin(const ScalarMap& score);

// Occ-detection quality stratified by distance to the nearest positive pixel
// of strat_source. Bin k covers [edges[k], edges[k+1]). pred is binarized at
// 0.5. Bins with no pixels are omitted.
std::vector<StratifiedBin> stratified(const ScalarMap& pred, const ScalarMap& gt,
                                      const ScalarMap& strat_source,
                                      const std::vector<Real>& edges);

}  // namespace mbocc
