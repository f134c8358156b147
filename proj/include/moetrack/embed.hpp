#pragma once

#include <vector>

#include "moetrack/geometry.hpp"
#include "moetrack/mask.hpp"
#include "moetrack/ops.hpp"
#include "moetrack/params.hpp"
#include "moetrack/rng.hpp"

namespace moetrack {

using Vec = std::vector<double>;

/// Weights of the instance-embedding head: the two mask-conditioning convs
/// with the projection to the fine-grained embedding, the coordinate MLP, the
/// pooled-feature projection, the two learned attention blocks and the shared
/// initial query tokens. The temporal attention layer is parameter-free.
struct TrackerParams {
    int roi_size = 7;      // G
    int width = 32;        // C, channel width of the unified representation
    int embed_dim = 16;    // D_e
    int query_dim = 8;     // C_q
    int query_tokens = 8;  // tokens per instance

    Mat conv1_w, conv1_b;  // 9 x C, 1 x C          (1 -> C channels, 3x3 pad 1)
    Mat conv2_w, conv2_b;  // 9C x C, 1 x C         (C -> C channels)
    Mat fc_w, fc_b;        // C x D_e, 1 x D_e
    Mat pos_w1, pos_b1;    // 4 x C_q, 1 x C_q
    Mat pos_w2, pos_b2;    // C_q x C_q, 1 x C_q
    Mat pool_w, pool_b;    // C x C_q, 1 x C_q
    Mat self_wq, self_wk, self_wv, self_wo;      // C_q x C_q
    Mat cross_wq, cross_wk, cross_wv, cross_wo;  // C_q x C_q
    Mat qo;                // query_tokens x C_q
};

TrackerParams init_tracker(int roi_size, int width, int embed_dim, int query_dim,
                           int query_tokens, Rng& rng);
ParamRegistry collect_params(TrackerParams& p);

/// Gather indices of the 3x3 zero-padded neighborhood on a g x g grid, one
/// index list per kernel offset (row-major offsets, -1 = out of bounds).
std::vector<std::vector<int>> im2col_indices(int g);

/// 3x3 convolution with padding 1 on a (g*g) x Cin channel-last grid,
/// weights laid out (9*Cin) x Cout with offset-major rows.
Mat conv3x3(const Mat& x, int g, const Mat& w, const Mat& b);

/// Mask-conditioned fine-grained embedding of one RoI grid: conv the pooled
/// mask up to C channels, add to the RoI features, conv again, global-average
/// pool and project to D_e. Returns a 1 x D_e row.
Mat fine_grained_embedding(const TrackerParams& p, const Mat& roi_feat, const Mat& mask_pooled);

/// Two-layer MLP on the normalized box coordinates, 1 x C_q.
Mat position_embedding(const TrackerParams& p, const Box& box);

/// Position-aware embedding: coordinate MLP output plus the projected
/// global-average pooled RoI features.
Mat position_aware_embedding(const TrackerParams& p, const Box& box, const Mat& roi_feat);

struct MemOut {
    std::vector<Mat> q;   // per candidate, query_tokens x C_q
    std::vector<Mat> qe;  // per tracklet, T x (query_tokens * C_q)
};

/// Query refinement: joint self-attention over all candidates' query tokens,
/// per-candidate cross-attention to its position-aware embedding, then a
/// parameter-free temporal self-attention along each tracklet's query history.
MemOut mem_forward(const TrackerParams& p, const std::vector<Mat>& ap_list,
                   const std::vector<std::vector<Mat>>& tracklet_query_history);

/// Unit-normalized concatenation of the fine-grained embedding and the
/// flattened learned query.
Vec comprehensive_feature(const Mat& ae, const Mat& q);

} // namespace moetrack
