#pragma once

#include <string>
#include <vector>

#include "moetrack/pipeline.hpp"

namespace moetrack {

/// Line-delimited JSON files. Every file opens with a header line carrying
/// the format name, version and mask grid size; payload lines follow, one
/// frame per line. Serialization is canonical (sorted keys, shortest float
/// round-trip), so write -> read -> write is byte-identical.

struct WireHeader {
    std::string format;
    int version = 1;
    int mask_h = 0;
    int mask_w = 0;
};

inline constexpr int kWireVersion = 1;

struct GtObject {
    int64_t id = -1;
    Box box;
    BinMask mask;
    bool visible = true;
};

struct GtFrame {
    int frame = 0;
    std::vector<GtObject> objects;
};

std::string detections_to_string(int mask_h, int mask_w,
                                 const std::vector<FrameDetections>& stream);
std::vector<FrameDetections> detections_from_string(const std::string& text, WireHeader* header);

std::string tracks_to_string(int mask_h, int mask_w, const std::vector<TrackRecord>& records);
std::vector<TrackRecord> tracks_from_string(const std::string& text, WireHeader* header);

std::string ground_truth_to_string(int mask_h, int mask_w, const std::vector<GtFrame>& frames);
std::vector<GtFrame> ground_truth_from_string(const std::string& text, WireHeader* header);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

} // namespace moetrack
