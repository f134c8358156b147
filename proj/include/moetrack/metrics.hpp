#pragma once

#include <optional>
#include <string>

#include "moetrack/wire.hpp"

namespace moetrack {

struct FrameMatchLog {
    int frame = 0;
    int64_t gt_id = -1;
    int64_t pred_id = -1;
};

struct ClearResult {
    std::optional<double> mota;  // absent when the ground truth is empty
    int fp = 0;
    int fn = 0;
    int id_switches = 0;
    int gt_count = 0;
    std::vector<FrameMatchLog> log;
};

/// CLEAR accounting with carried-over correspondences then Hungarian on IoU.
ClearResult clear_mot(const std::vector<GtFrame>& gt, const std::vector<TrackRecord>& tracks,
                      double iou_threshold = 0.5);

/// Identity-F1 under the optimal global id correspondence.
double idf1(const std::vector<GtFrame>& gt, const std::vector<TrackRecord>& tracks,
            double iou_threshold = 0.5);

/// Mean per-frame IoU for a single ground-truth object; frames without a
/// prediction count 0. The predicted track is the id covering the most frames
/// (lowest id on ties).
double average_overlap(const std::vector<GtFrame>& gt, const std::vector<TrackRecord>& tracks);

struct MetricReport {
    std::optional<double> mota;
    double idf1 = 0.0;
    int id_switches = 0;
    int fp = 0;
    int fn = 0;
    std::optional<double> ao;  // only for single-object ground truth
    std::vector<FrameMatchLog> log;
};

MetricReport evaluate(const std::vector<GtFrame>& gt, const std::vector<TrackRecord>& tracks,
                      double iou_threshold = 0.5);

std::string report_to_json(const MetricReport& r);
std::string report_to_csv(const MetricReport& r);

} // namespace moetrack
