#pragma once

#include "moetrack/moe.hpp"
#include "moetrack/wire.hpp"

namespace moetrack {

enum class MotionModel { Linear, Bounce };

struct OcclusionWindow {
    int object = 0;
    int start = 0;
    int length = 0;
};

struct SceneConfig {
    int n_objects = 5;
    int n_frames = 200;
    int height = 64;
    int width = 64;
    int mask_height = 64;
    int mask_width = 64;
    MotionModel motion = MotionModel::Linear;
    double sigma_pos = 0.005;      // detection center noise, fraction of image
    double miss_rate = 0.05;
    std::vector<OcclusionWindow> occlusions;
    double appearance_margin = 0.5;
    int appearance_dim = 16;
    ModalityPair modality = ModalityPair::RgbT;
    bool emit_ghosts = false;      // occluded objects as low-score detections
    double feature_noise = 0.0;    // additive noise on emitted features
    double object_size = 0.12;     // box extent, fraction of image
    bool allow_overlap = false;
    uint64_t seed = 1;
};

void validate_scene(const SceneConfig& cfg);

struct SimSequence {
    std::vector<GtFrame> gt;            // per frame, all objects with visibility
    std::vector<Mat> frames_r;          // H x W appearance field
    std::vector<Mat> frames_tde;        // H x W auxiliary field (empty if RGB-only)
    std::vector<Vec> appearance;        // per-object feature vectors
    std::vector<double> value_r;        // per-object rendered scalar, RGB field
    std::vector<double> value_tde;      // per-object rendered scalar, TDE field
};

/// Deterministic scene: objects move on disjoint lanes, appearance vectors
/// pairwise separated by the configured margin, RGB scalar shared within
/// object pairs while the auxiliary scalar stays distinct (so some pairs are
/// separable only jointly).
SimSequence generate_sequence(const SceneConfig& cfg);

/// Oracle detector over one generated frame: visible objects emit noisy
/// detections (s_occ = +1), misses drop at the configured rate, occluded
/// objects emit nothing or low-score ghosts (s_occ = -1).
/// `provenance[k]` (when requested) is the ground-truth object index of
/// detection k in the same frame order, -1 for ghosts.
std::vector<FrameDetections> oracle_detect(const SimSequence& seq, const SceneConfig& cfg,
                                           std::vector<std::vector<int>>* provenance = nullptr);

} // namespace moetrack
