#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "moetrack/assoc.hpp"

namespace moetrack {

/// One identity: bounded feature history (newest at the back), the parallel
/// query history feeding temporal attention, and the last frame it matched.
struct Tracklet {
    int64_t id = -1;
    std::deque<std::pair<int, Vec>> history;  // (frame, comprehensive feature)
    std::deque<Mat> q_history;                // learned queries, may be empty mats
    int last_seen = -1;
};

struct FrameResult {
    int frame = 0;
    std::vector<std::pair<int64_t, int>> matches;  // (tracklet id, candidate index)
    std::vector<std::pair<int64_t, int>> new_ids;  // (fresh id, candidate index)
    std::vector<int64_t> terminated;               // ids retired this frame
};

struct CandidateUpdate {
    Vec f;
    Mat q;        // may be empty when the feature path bypassed the queries
    Box box;
    double s_mask = 0.0;
    double s_occ = 0.0;
};

/// Frame-ordered single-writer identity store. Matched tracklets refresh
/// their rings, unmatched candidates spawn fresh monotonically increasing
/// ids (in a canonical candidate order so id decisions are invariant under
/// input permutation), and tracklets silent for more than `max_gap` frames
/// retire and never re-enter matching.
class TrackStore {
public:
    TrackStore(int history_cap, int max_gap)
        : history_cap_(history_cap), max_gap_(max_gap) {
        MTK_REQUIRE(history_cap >= 1, "history capacity must be >= 1");
        MTK_REQUIRE(max_gap >= 0, "max gap must be >= 0");
    }

    const std::vector<Tracklet>& active() const { return active_; }
    int64_t next_id() const { return next_id_; }
    const std::vector<int64_t>& terminated_ids() const { return terminated_; }

    /// `matched`: (index into active(), candidate index) pairs.
    FrameResult update(int frame, const std::vector<std::pair<int, int>>& matched,
                       const std::vector<CandidateUpdate>& candidates);

private:
    int history_cap_;
    int max_gap_;
    int64_t next_id_ = 0;
    int last_frame_ = -1;
    std::vector<Tracklet> active_;
    std::vector<int64_t> terminated_;
};

} // namespace moetrack
