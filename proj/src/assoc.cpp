#include "moetrack/assoc.hpp"

#include <cmath>

namespace moetrack {

Vec tracklet_representative(const std::vector<Vec>& history) {
    MTK_REQUIRE(!history.empty(), "tracklet_representative: empty history");
    Vec mean(history[0].size(), 0.0);
    for (const Vec& f : history) {
        MTK_REQUIRE(f.size() == mean.size(), "tracklet_representative: feature width mismatch");
        for (size_t i = 0; i < f.size(); ++i) mean[i] += f[i];
    }
    for (double& v : mean) v /= static_cast<double>(history.size());
    MTK_REQUIRE(norm2(mean) > 0.0, "tracklet_representative: zero-norm representative");
    return l2_normalize(mean);
}

Mat similarity_matrix(const std::vector<Vec>& reps, const std::vector<Vec>& feats) {
    const int n = static_cast<int>(reps.size());
    const int m = static_cast<int>(feats.size());
    MTK_REQUIRE(n >= 1 && m >= 1, "similarity_matrix: need at least one row and column");
    for (const Vec& r : reps)
        MTK_REQUIRE(norm2(r) > 0.0, "similarity_matrix: zero-norm representative");

    Mat dots(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            MTK_REQUIRE(feats[static_cast<size_t>(j)].size() == reps[static_cast<size_t>(i)].size(),
                        "similarity_matrix: feature width mismatch");
            dots.at(i, j) = dot(reps[static_cast<size_t>(i)], feats[static_cast<size_t>(j)]);
        }

    // softmax over candidates for each tracklet row
    Mat over_cands(n, m);
    std::vector<double> buf;
    for (int i = 0; i < n; ++i) {
        buf.assign(static_cast<size_t>(m), 0.0);
        for (int j = 0; j < m; ++j) buf[static_cast<size_t>(j)] = dots.at(i, j);
        const std::vector<double> s = softmax(buf);
        for (int j = 0; j < m; ++j) over_cands.at(i, j) = s[static_cast<size_t>(j)];
    }
    // softmax over tracklets for each candidate column
    Mat over_tracks(n, m);
    for (int j = 0; j < m; ++j) {
        buf.assign(static_cast<size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = dots.at(i, j);
        const std::vector<double> s = softmax(buf);
        for (int i = 0; i < n; ++i) over_tracks.at(i, j) = s[static_cast<size_t>(i)];
    }

    Mat a(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const double s1 = 0.5 * (over_cands.at(i, j) + over_tracks.at(i, j));
            const double s2 =
                cosine(feats[static_cast<size_t>(j)], reps[static_cast<size_t>(i)]);
            a.at(i, j) = 0.5 * (s1 + s2);
        }
    check_finite(a, "assignment matrix");
    return a;
}

MatchResult match(const Mat& a, double tau_th) {
    MatchResult out;
    const Assignment assignment = assign_max(a);
    for (const auto& [i, j] : assignment.pairs)
        if (a.at(i, j) > tau_th) out.pairs.emplace_back(i, j);
    return out;
}

LossValue loss_sup(const Mat& a, int i) {
    MTK_REQUIRE(i >= 0 && i < a.rows && i < a.cols, "loss_sup: target index out of range");
    LossValue out;
    double p = a.at(i, i);
    if (p <= 0.0) {
        p = 1e-12;
        out.clamped = true;
    }
    out.value = -std::log(std::min(p, 1.0));
    return out;
}

LossValue loss_self(const Mat& a, const std::vector<std::pair<int, int>>& correspondence) {
    MTK_REQUIRE(!correspondence.empty(), "loss_self: empty correspondence set");
    LossValue out;
    for (const auto& [i, j] : correspondence) {
        MTK_REQUIRE(i >= 0 && i < a.rows && j >= 0 && j < a.cols,
                    "loss_self: correspondence out of range");
        double p = a.at(i, j);
        if (p <= 0.0) {
            p = 1e-12;
            out.clamped = true;
        }
        out.value += -std::log(std::min(p, 1.0));
    }
    return out;
}

double loss_tamot_m(const Mat& a, const Mat& a_gt) {
    MTK_REQUIRE(a.same_shape(a_gt), "loss_tamot_m: shape mismatch");
    MTK_REQUIRE(a.size() > 0, "loss_tamot_m: empty matrix");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double p = std::clamp(a.d[i], 1e-12, 1.0 - 1e-12);
        const double g = a_gt.d[i];
        MTK_REQUIRE(g == 0.0 || g == 1.0, "loss_tamot_m: ground truth must be binary");
        acc += g * std::log(p) + (1.0 - g) * std::log(1.0 - p);
    }
    return -acc / static_cast<double>(a.size());
}

} // namespace moetrack
