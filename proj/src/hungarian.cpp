#include "moetrack/hungarian.hpp"

#include <algorithm>
#include <limits>

namespace moetrack {

namespace {

/// Classic O(n^3) Hungarian with potentials on a square cost matrix
/// (minimization). Returns row -> column.
std::vector<int> hungarian_min_square(const Mat& cost) {
    const int n = cost.rows;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(n) + 1, 0);    // column -> row (1-based)
    std::vector<int> way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, kInf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = p[static_cast<size_t>(j0)];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost.at(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                                   v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<size_t>(j)] > 0) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

} // namespace

Assignment assign_max(const Mat& affinity) {
    MTK_REQUIRE(affinity.rows >= 1 && affinity.cols >= 1, "assign_max: empty matrix");
    check_finite(affinity, "assignment matrix");
    const int n = std::max(affinity.rows, affinity.cols);
    Mat cost(n, n, -kAssignSentinel);  // pad with huge cost
    for (int i = 0; i < affinity.rows; ++i)
        for (int j = 0; j < affinity.cols; ++j) cost.at(i, j) = -affinity.at(i, j);
    const std::vector<int> row_to_col = hungarian_min_square(cost);
    Assignment out;
    for (int i = 0; i < affinity.rows; ++i) {
        const int j = row_to_col[static_cast<size_t>(i)];
        if (j < 0 || j >= affinity.cols) continue;
        out.pairs.emplace_back(i, j);
        out.total += affinity.at(i, j);
    }
    return out;
}

} // namespace moetrack
