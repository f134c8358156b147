#pragma once

#include <optional>

#include "moetrack/store.hpp"

namespace moetrack {

struct Detection {
    Box box;
    BinMask mask;  // may be empty (box-only detection)
    double s_mask = 0.0;
    double s_occ = 0.0;
    std::optional<Vec> feature;  // explicit appearance feature, bypasses the head
};

struct FrameDetections {
    int frame = 0;
    std::vector<Detection> detections;
};

struct Candidate {
    Box box;
    BinMask mask;
    double s_mask = 0.0;
    double s_occ = 0.0;
    std::optional<Vec> feature;
};

/// Occlusion-gated, threshold-gated candidate set for single-target tasks:
/// the target and every distractor above tau_mask, boxes tightened to masks.
std::vector<Candidate> generate_candidates_sot(const std::vector<Detection>& dets,
                                               double tau_mask);

/// Score-floored candidate set for multi-object tasks; boxes refined to the
/// mask extent when a mask is present. Duplicates are kept, the matcher
/// resolves them.
std::vector<Candidate> generate_candidates_mot(const std::vector<Detection>& dets,
                                               double score_floor);

enum class TrackMode { Mot, Sot };

struct TrackerConfig {
    TrackMode mode = TrackMode::Mot;
    double tau_mask = 0.7;
    double tau_th = 0.75;
    int history = 15;
    int max_gap = 50;
    int roi_size = 7;
    double score_floor = 0.5;
};

struct TrackRecord {
    int frame = 0;
    int64_t id = -1;
    Box box;
    double affinity = 1.0;
};

struct SequenceResult {
    std::vector<FrameResult> frames;
    std::vector<TrackRecord> records;
    int64_t sot_target_id = -1;
};

/// Frame-by-frame association driver. Candidates carrying explicit features
/// match on those directly; the rest run through RoI extraction (from the
/// unified feature map when one is supplied, else from the mask raster) and
/// the query head.
class TrackPipeline {
public:
    TrackPipeline(const TrackerConfig& cfg, const TrackerParams& params)
        : cfg_(cfg), params_(params), store_(cfg.history, cfg.max_gap) {}

    /// `f_u` laid out as (fh*fw) x C may be null. Returns this frame's result.
    FrameResult step(int frame, const std::vector<Detection>& dets, const Mat* f_u = nullptr,
                     int fh = 0, int fw = 0);

    void set_sot_prior(const Box& box) { sot_prior_ = box; }
    const TrackStore& store() const { return store_; }
    const std::vector<TrackRecord>& records() const { return records_; }
    int64_t sot_target_id() const { return sot_target_id_; }

private:
    TrackerConfig cfg_;
    TrackerParams params_;
    TrackStore store_;
    std::optional<Box> sot_prior_;
    int64_t sot_target_id_ = -1;
    std::vector<TrackRecord> records_;
};

/// End-to-end run over a detections stream.
SequenceResult track_sequence(const TrackerConfig& cfg, const TrackerParams& params,
                              const std::vector<FrameDetections>& stream);

/// End-to-end run over modality frames: each frame pair goes through the
/// encoder, detections take the RoI path on the unified representation.
SequenceResult track_sequence_frames(const TrackerConfig& cfg, const TrackerParams& params,
                                     const EncoderParams& enc,
                                     const std::vector<FrameDetections>& stream,
                                     const std::vector<Mat>& frames_r,
                                     const std::vector<Mat>* frames_tde,
                                     bool use_f32 = false);

} // namespace moetrack
