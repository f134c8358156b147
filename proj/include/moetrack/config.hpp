#pragma once

#include <string>

#include "moetrack/pipeline.hpp"
#include "moetrack/sim.hpp"

namespace moetrack {

enum class Precision { F32, F64 };

/// Full run configuration. Defaults match the reference constants: 4 experts
/// with top-2 activation, tau_mask 0.7, tau_th 0.75, history 15, retirement
/// gap 50, 8 query tokens. Unknown keys anywhere are hard errors.
struct RunConfig {
    uint64_t seed = 1;
    std::string out_dir = "out";

    struct Encoder {
        int width = 32;
        int depth = 2;
        int patch = 8;
        int heads = 2;
        int common_experts = 4;
        int specific_experts = 4;
        int k_active = 2;
        double mu = 1.0;
        double lambda = 1.0;
        double mask_ratio = 0.25;
        Precision precision = Precision::F64;
    } encoder;

    struct Tracker {
        double tau_mask = 0.7;
        double tau_th = 0.75;
        int history = 15;
        int max_gap = 50;
        int roi_size = 7;
        int embed_dim = 16;
        int query_dim = 8;
        int query_tokens = 8;
        double score_floor = 0.5;
        double aug_translate = 0.05;
        double aug_score_jitter = 0.05;
        double aug_feature_noise = 0.01;
    } tracker;

    SceneConfig sim;

    struct Train {
        double step_size = 1e-2;
        int steps = 500;
    } train;
};

RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json_text(const RunConfig& cfg);

TrackerConfig tracker_config(const RunConfig& cfg, TrackMode mode);

} // namespace moetrack
