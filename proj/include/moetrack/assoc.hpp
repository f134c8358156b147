#pragma once

#include <utility>
#include <vector>

#include "moetrack/embed.hpp"
#include "moetrack/hungarian.hpp"

namespace moetrack {

/// Mean of history features, re-normalized: the single representative vector
/// a tracklet exposes to matching.
Vec tracklet_representative(const std::vector<Vec>& history);

/// N x M assignment matrix over tracklet representatives (rows) and candidate
/// features (columns): half bi-softmax plus half cosine.
Mat similarity_matrix(const std::vector<Vec>& reps, const std::vector<Vec>& feats);

struct MatchResult {
    std::vector<std::pair<int, int>> pairs;  // (tracklet row, candidate col)
};

/// Hungarian assignment on the affinity matrix; pairs at or below the
/// threshold are dropped afterwards ("exceeding" reads strict).
MatchResult match(const Mat& a, double tau_th);

struct LossValue {
    double value = 0.0;
    bool clamped = false;  // a probability had to be floored at 1e-12
};

LossValue loss_sup(const Mat& a, int i);
LossValue loss_self(const Mat& a, const std::vector<std::pair<int, int>>& correspondence);
double loss_tamot_m(const Mat& a, const Mat& a_gt);

} // namespace moetrack
