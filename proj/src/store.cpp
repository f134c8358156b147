#include "moetrack/store.hpp"

#include <algorithm>

namespace moetrack {

FrameResult TrackStore::update(int frame, const std::vector<std::pair<int, int>>& matched,
                               const std::vector<CandidateUpdate>& candidates) {
    MTK_REQUIRE(frame > last_frame_, "store update must be strictly frame-ordered");
    last_frame_ = frame;

    FrameResult result;
    result.frame = frame;

    std::vector<char> cand_used(candidates.size(), 0);
    std::vector<char> track_used(active_.size(), 0);
    for (const auto& [ti, ci] : matched) {
        MTK_REQUIRE(ti >= 0 && ti < static_cast<int>(active_.size()),
                    "update: tracklet index out of range");
        MTK_REQUIRE(ci >= 0 && ci < static_cast<int>(candidates.size()),
                    "update: candidate index out of range");
        MTK_REQUIRE(!track_used[static_cast<size_t>(ti)], "update: tracklet matched twice");
        MTK_REQUIRE(!cand_used[static_cast<size_t>(ci)], "update: candidate assigned twice");
        track_used[static_cast<size_t>(ti)] = 1;
        cand_used[static_cast<size_t>(ci)] = 1;

        Tracklet& t = active_[static_cast<size_t>(ti)];
        const CandidateUpdate& c = candidates[static_cast<size_t>(ci)];
        t.history.emplace_back(frame, c.f);
        t.q_history.push_back(c.q);
        while (static_cast<int>(t.history.size()) > history_cap_) {
            t.history.pop_front();
            t.q_history.pop_front();
        }
        t.last_seen = frame;
        result.matches.emplace_back(t.id, ci);
    }

    // canonical spawn order: box geometry, then scores, then index
    std::vector<int> spawn;
    for (int ci = 0; ci < static_cast<int>(candidates.size()); ++ci)
        if (!cand_used[static_cast<size_t>(ci)]) spawn.push_back(ci);
    std::stable_sort(spawn.begin(), spawn.end(), [&](int a, int b) {
        const CandidateUpdate& x = candidates[static_cast<size_t>(a)];
        const CandidateUpdate& y = candidates[static_cast<size_t>(b)];
        const auto kx = std::make_tuple(x.box.cx, x.box.cy, x.box.w, x.box.h, x.s_mask, x.s_occ);
        const auto ky = std::make_tuple(y.box.cx, y.box.cy, y.box.w, y.box.h, y.s_mask, y.s_occ);
        return kx < ky;
    });
    for (int ci : spawn) {
        const CandidateUpdate& c = candidates[static_cast<size_t>(ci)];
        Tracklet t;
        t.id = next_id_++;
        t.history.emplace_back(frame, c.f);
        t.q_history.push_back(c.q);
        t.last_seen = frame;
        active_.push_back(std::move(t));
        result.new_ids.emplace_back(active_.back().id, ci);
    }

    // retire tracklets silent for more than max_gap frames
    std::vector<Tracklet> keep;
    keep.reserve(active_.size());
    for (Tracklet& t : active_) {
        if (frame - t.last_seen > max_gap_) {
            result.terminated.push_back(t.id);
            terminated_.push_back(t.id);
        } else {
            keep.push_back(std::move(t));
        }
    }
    active_ = std::move(keep);
    return result;
}

} // namespace moetrack
