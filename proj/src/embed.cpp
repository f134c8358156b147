#include "moetrack/embed.hpp"

#include <cmath>

namespace moetrack {

namespace {

Mat randn(int r, int c, double sigma, Rng& rng) {
    Mat m(r, c);
    for (double& v : m.d) v = rng.normal(0.0, sigma);
    return m;
}

} // namespace

TrackerParams init_tracker(int roi_size, int width, int embed_dim, int query_dim,
                           int query_tokens, Rng& rng) {
    MTK_CONFIG_REQUIRE(roi_size >= 1, "tracker.roi_size must be >= 1");
    MTK_CONFIG_REQUIRE(width >= 1, "tracker feature width must be >= 1");
    MTK_CONFIG_REQUIRE(embed_dim >= 1, "tracker.embed_dim must be >= 1");
    MTK_CONFIG_REQUIRE(query_dim >= 1, "tracker.query_dim must be >= 1");
    MTK_CONFIG_REQUIRE(query_tokens >= 1, "tracker.query_tokens must be >= 1");
    TrackerParams p;
    p.roi_size = roi_size;
    p.width = width;
    p.embed_dim = embed_dim;
    p.query_dim = query_dim;
    p.query_tokens = query_tokens;
    const double s9 = 1.0 / 3.0;
    p.conv1_w = randn(9, width, s9, rng);
    p.conv1_b = Mat(1, width);
    p.conv2_w = randn(9 * width, width, 1.0 / (3.0 * std::sqrt(static_cast<double>(width))), rng);
    p.conv2_b = Mat(1, width);
    p.fc_w = randn(width, embed_dim, 1.0 / std::sqrt(static_cast<double>(width)), rng);
    p.fc_b = Mat(1, embed_dim);
    p.pos_w1 = randn(4, query_dim, 0.5, rng);
    p.pos_b1 = Mat(1, query_dim);
    p.pos_w2 = randn(query_dim, query_dim, 1.0 / std::sqrt(static_cast<double>(query_dim)), rng);
    p.pos_b2 = Mat(1, query_dim);
    p.pool_w = randn(width, query_dim, 1.0 / std::sqrt(static_cast<double>(width)), rng);
    p.pool_b = Mat(1, query_dim);
    const double sq = 1.0 / std::sqrt(static_cast<double>(query_dim));
    p.self_wq = randn(query_dim, query_dim, sq, rng);
    p.self_wk = randn(query_dim, query_dim, sq, rng);
    p.self_wv = randn(query_dim, query_dim, sq, rng);
    p.self_wo = randn(query_dim, query_dim, sq, rng);
    p.cross_wq = randn(query_dim, query_dim, sq, rng);
    p.cross_wk = randn(query_dim, query_dim, sq, rng);
    p.cross_wv = randn(query_dim, query_dim, sq, rng);
    p.cross_wo = randn(query_dim, query_dim, sq, rng);
    p.qo = randn(query_tokens, query_dim, 1.0, rng);
    return p;
}

ParamRegistry collect_params(TrackerParams& p) {
    ParamRegistry reg;
    reg.push_back({"tracker.conv1.w", &p.conv1_w, false});
    reg.push_back({"tracker.conv1.b", &p.conv1_b, false});
    reg.push_back({"tracker.conv2.w", &p.conv2_w, false});
    reg.push_back({"tracker.conv2.b", &p.conv2_b, false});
    reg.push_back({"tracker.fc.w", &p.fc_w, false});
    reg.push_back({"tracker.fc.b", &p.fc_b, false});
    reg.push_back({"tracker.pos.w1", &p.pos_w1, false});
    reg.push_back({"tracker.pos.b1", &p.pos_b1, false});
    reg.push_back({"tracker.pos.w2", &p.pos_w2, false});
    reg.push_back({"tracker.pos.b2", &p.pos_b2, false});
    reg.push_back({"tracker.pool.w", &p.pool_w, false});
    reg.push_back({"tracker.pool.b", &p.pool_b, false});
    reg.push_back({"tracker.mem.self.wq", &p.self_wq, false});
    reg.push_back({"tracker.mem.self.wk", &p.self_wk, false});
    reg.push_back({"tracker.mem.self.wv", &p.self_wv, false});
    reg.push_back({"tracker.mem.self.wo", &p.self_wo, false});
    reg.push_back({"tracker.mem.cross.wq", &p.cross_wq, false});
    reg.push_back({"tracker.mem.cross.wk", &p.cross_wk, false});
    reg.push_back({"tracker.mem.cross.wv", &p.cross_wv, false});
    reg.push_back({"tracker.mem.cross.wo", &p.cross_wo, false});
    reg.push_back({"tracker.qo", &p.qo, false});
    return reg;
}

std::vector<std::vector<int>> im2col_indices(int g) {
    std::vector<std::vector<int>> idx;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            std::vector<int> one(static_cast<size_t>(g) * g, -1);
            for (int y = 0; y < g; ++y)
                for (int x = 0; x < g; ++x) {
                    const int sy = y + dy;
                    const int sx = x + dx;
                    if (sy >= 0 && sy < g && sx >= 0 && sx < g)
                        one[static_cast<size_t>(y) * g + x] = sy * g + sx;
                }
            idx.push_back(std::move(one));
        }
    }
    return idx;
}

Mat conv3x3(const Mat& x, int g, const Mat& w, const Mat& b) {
    MTK_REQUIRE(x.rows == g * g, "conv3x3: grid shape mismatch");
    const int cin = x.cols;
    MTK_REQUIRE(w.rows == 9 * cin, "conv3x3: weight shape mismatch");
    const auto idx = im2col_indices(g);
    Mat cols(g * g, 9 * cin);
    for (int k = 0; k < 9; ++k)
        for (int r = 0; r < g * g; ++r) {
            const int src = idx[static_cast<size_t>(k)][static_cast<size_t>(r)];
            if (src < 0) continue;
            for (int c = 0; c < cin; ++c) cols.at(r, k * cin + c) = x.at(src, c);
        }
    return add_rowvec(matmul(cols, w), b);
}

Mat fine_grained_embedding(const TrackerParams& p, const Mat& roi_feat, const Mat& mask_pooled) {
    const int g = p.roi_size;
    MTK_REQUIRE(roi_feat.rows == g * g && roi_feat.cols == p.width,
                "fine_grained_embedding: RoI grid shape mismatch");
    MTK_REQUIRE(mask_pooled.rows == g * g && mask_pooled.cols == 1,
                "fine_grained_embedding: pooled mask shape mismatch");
    const Mat lifted = conv3x3(mask_pooled, g, p.conv1_w, p.conv1_b);
    const Mat mixed = conv3x3(add(lifted, roi_feat), g, p.conv2_w, p.conv2_b);
    // global average pool
    Mat pooled(1, p.width);
    for (int c = 0; c < p.width; ++c) {
        double s = 0.0;
        for (int r = 0; r < mixed.rows; ++r) s += mixed.at(r, c);
        pooled.at(0, c) = s * (1.0 / mixed.rows);
    }
    return add_rowvec(matmul(pooled, p.fc_w), p.fc_b);
}

Mat position_embedding(const TrackerParams& p, const Box& box) {
    require_box(box, "position_embedding");
    Mat v(1, 4);
    v.at(0, 0) = box.cx;
    v.at(0, 1) = box.cy;
    v.at(0, 2) = box.w;
    v.at(0, 3) = box.h;
    const Mat h = gelu_mat(add_rowvec(matmul(v, p.pos_w1), p.pos_b1));
    return add_rowvec(matmul(h, p.pos_w2), p.pos_b2);
}

Mat position_aware_embedding(const TrackerParams& p, const Box& box, const Mat& roi_feat) {
    Mat pooled(1, p.width);
    for (int c = 0; c < p.width; ++c) {
        double s = 0.0;
        for (int r = 0; r < roi_feat.rows; ++r) s += roi_feat.at(r, c);
        pooled.at(0, c) = s * (1.0 / roi_feat.rows);
    }
    return add(position_embedding(p, box), add_rowvec(matmul(pooled, p.pool_w), p.pool_b));
}

MemOut mem_forward(const TrackerParams& p, const std::vector<Mat>& ap_list,
                   const std::vector<std::vector<Mat>>& tracklet_query_history) {
    MemOut out;
    const int nq = p.query_tokens;
    const int m = static_cast<int>(ap_list.size());
    if (m > 0) {
        // joint self-attention over all candidates' query tokens
        Mat x0(m * nq, p.query_dim);
        for (int i = 0; i < m; ++i)
            for (int r = 0; r < nq; ++r)
                for (int c = 0; c < p.query_dim; ++c) x0.at(i * nq + r, c) = p.qo.at(r, c);
        const Mat attn = matmul(
            attention(matmul(x0, p.self_wq), matmul(x0, p.self_wk), matmul(x0, p.self_wv)),
            p.self_wo);
        const Mat x1 = add(x0, attn);
        // per-candidate cross-attention to its position-aware embedding
        for (int i = 0; i < m; ++i) {
            MTK_REQUIRE(ap_list[static_cast<size_t>(i)].rows == 1 &&
                            ap_list[static_cast<size_t>(i)].cols == p.query_dim,
                        "mem_forward: position-aware embedding shape mismatch");
            Mat xi(nq, p.query_dim);
            for (int r = 0; r < nq; ++r)
                for (int c = 0; c < p.query_dim; ++c) xi.at(r, c) = x1.at(i * nq + r, c);
            const Mat& ap = ap_list[static_cast<size_t>(i)];
            const Mat cross = matmul(attention(matmul(xi, p.cross_wq), matmul(ap, p.cross_wk),
                                               matmul(ap, p.cross_wv)),
                                     p.cross_wo);
            out.q.push_back(add(xi, cross));
        }
    }
    // parameter-free temporal self-attention per tracklet
    for (const std::vector<Mat>& hist : tracklet_query_history) {
        if (hist.empty()) {
            out.qe.emplace_back();
            continue;
        }
        Mat seq(static_cast<int>(hist.size()), nq * p.query_dim);
        for (size_t tstep = 0; tstep < hist.size(); ++tstep) {
            MTK_REQUIRE(hist[tstep].rows == nq && hist[tstep].cols == p.query_dim,
                        "mem_forward: query history shape mismatch");
            for (int r = 0; r < nq; ++r)
                for (int c = 0; c < p.query_dim; ++c)
                    seq.at(static_cast<int>(tstep), r * p.query_dim + c) = hist[tstep].at(r, c);
        }
        out.qe.push_back(attention(seq, seq, seq));
    }
    return out;
}

Vec comprehensive_feature(const Mat& ae, const Mat& q) {
    MTK_REQUIRE(ae.rows == 1, "comprehensive_feature: ae must be a row");
    Vec f;
    f.reserve(ae.size() + q.size());
    for (double v : ae.d) f.push_back(v);
    for (double v : q.d) f.push_back(v);
    return l2_normalize(f);  // throws on the zero vector
}

} // namespace moetrack
