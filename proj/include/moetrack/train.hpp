#pragma once

#include <functional>

#include "moetrack/config.hpp"
#include "moetrack/graph.hpp"

namespace moetrack {

/// Tape handles mirroring TrackerParams.
struct TrkGraph {
    int conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
    int pos_w1, pos_b1, pos_w2, pos_b2, pool_w, pool_b;
    int self_wq, self_wk, self_wv, self_wo;
    int cross_wq, cross_wk, cross_wv, cross_wo;
    int qo;
    int roi_size, width, embed_dim, query_dim, query_tokens;
    std::vector<std::pair<std::string, int>> named;
};

TrkGraph lift_tracker(Tape& t, TrackerParams& p);

int t_conv3x3(Tape& t, int x, int g, int w, int b);
int t_fine_grained(Tape& t, const TrkGraph& g, int roi, const Mat& mask_pooled);
int t_position_aware(Tape& t, const TrkGraph& g, const Box& box, int roi);
std::vector<int> t_mem_queries(Tape& t, const TrkGraph& g, const std::vector<int>& ap_ids);
int t_comprehensive(Tape& t, const TrkGraph& g, int ae, int q);

/// Assignment matrix between stacked tracklet representatives (rows of
/// `reps`) and stacked candidate features (rows of `feats`), both unit-norm.
int t_similarity(Tape& t, int reps, int feats);

struct StepLosses {
    double l_cm = 0, l_ce = 0, l_task = 0;
    double l_sup = 0, l_self = 0, l_tamot = 0;
    double total = 0;
};

struct TrainResult {
    std::vector<StepLosses> curve;
    bool diverged = false;
    int diverged_step = -1;
};

/// Plain gradient descent on the mixture losses (token grids from the scene
/// generator) plus the association losses (candidate pairs from consecutive
/// ground-truth frames). The shared expert never moves.
TrainResult train_toy(const RunConfig& cfg, EncoderParams& enc, TrackerParams& trk, int steps,
                      const std::function<void(int, const StepLosses&)>& on_step = nullptr);

std::string losses_to_csv(const std::vector<StepLosses>& curve);

/// Raw bytes of every frozen block, for bit-identity checks around training.
std::vector<uint8_t> snapshot_frozen(EncoderParams& enc);

} // namespace moetrack
