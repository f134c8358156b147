#pragma once

#include <utility>
#include <vector>

#include "moetrack/mat.hpp"

namespace moetrack {

/// Large negative affinity used to pad rectangular problems to square; a
/// padded pair can never beat any real pair.
inline constexpr double kAssignSentinel = -1e9;

struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (row, col), rows sorted
    double total = 0.0;                      // sum of affinities over pairs
};

/// Optimal one-to-one assignment maximizing total affinity on an N x M
/// matrix. Exactly min(N, M) pairs are returned (no thresholding here).
Assignment assign_max(const Mat& affinity);

} // namespace moetrack
