#include "moetrack/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "moetrack/hungarian.hpp"

namespace moetrack {

namespace {

using BoxById = std::map<int64_t, Box>;

BoxById visible_gt(const GtFrame& f) {
    BoxById out;
    for (const GtObject& o : f.objects)
        if (o.visible) out[o.id] = o.box;
    return out;
}

std::map<int, BoxById> tracks_by_frame(const std::vector<TrackRecord>& tracks) {
    std::map<int, BoxById> out;
    for (const TrackRecord& r : tracks) out[r.frame][r.id] = r.box;
    return out;
}

} // namespace

ClearResult clear_mot(const std::vector<GtFrame>& gt, const std::vector<TrackRecord>& tracks,
                      double iou_threshold) {
    ClearResult res;
    const std::map<int, BoxById> preds = tracks_by_frame(tracks);
    std::map<int64_t, int64_t> corr;  // gt id -> last matched pred id

    for (const GtFrame& f : gt) {
        const BoxById gts = visible_gt(f);
        BoxById prd;
        if (auto it = preds.find(f.frame); it != preds.end()) prd = it->second;
        res.gt_count += static_cast<int>(gts.size());

        std::set<int64_t> free_gt, free_pred;
        for (const auto& [id, box] : gts) free_gt.insert(id);
        for (const auto& [id, box] : prd) free_pred.insert(id);

        std::vector<std::pair<int64_t, int64_t>> frame_matches;
        // carry over previous correspondences while they still overlap
        for (const auto& [g, p] : corr) {
            if (!free_gt.count(g) || !free_pred.count(p)) continue;
            if (iou(gts.at(g), prd.at(p)) >= iou_threshold) {
                frame_matches.emplace_back(g, p);
                free_gt.erase(g);
                free_pred.erase(p);
            }
        }
        // Hungarian on the rest
        if (!free_gt.empty() && !free_pred.empty()) {
            const std::vector<int64_t> gl(free_gt.begin(), free_gt.end());
            const std::vector<int64_t> pl(free_pred.begin(), free_pred.end());
            Mat aff(static_cast<int>(gl.size()), static_cast<int>(pl.size()), kAssignSentinel);
            for (size_t i = 0; i < gl.size(); ++i)
                for (size_t j = 0; j < pl.size(); ++j) {
                    const double ov = iou(gts.at(gl[i]), prd.at(pl[j]));
                    if (ov >= iou_threshold)
                        aff.at(static_cast<int>(i), static_cast<int>(j)) = ov;
                }
            for (const auto& [i, j] : assign_max(aff).pairs) {
                if (aff.at(i, j) <= kAssignSentinel) continue;
                frame_matches.emplace_back(gl[static_cast<size_t>(i)],
                                           pl[static_cast<size_t>(j)]);
                free_gt.erase(gl[static_cast<size_t>(i)]);
                free_pred.erase(pl[static_cast<size_t>(j)]);
            }
        }
        for (const auto& [g, p] : frame_matches) {
            const auto prev = corr.find(g);
            if (prev != corr.end() && prev->second != p) ++res.id_switches;
            corr[g] = p;
            res.log.push_back({f.frame, g, p});
        }
        res.fp += static_cast<int>(free_pred.size());
        res.fn += static_cast<int>(free_gt.size());
    }
    if (res.gt_count > 0)
        res.mota = 1.0 - static_cast<double>(res.fp + res.fn + res.id_switches) / res.gt_count;
    return res;
}

double idf1(const std::vector<GtFrame>& gt, const std::vector<TrackRecord>& tracks,
            double iou_threshold) {
    const std::map<int, BoxById> preds = tracks_by_frame(tracks);
    std::set<int64_t> gt_ids, pred_ids;
    int64_t total_gt = 0, total_pred = 0;
    for (const GtFrame& f : gt)
        for (const GtObject& o : f.objects)
            if (o.visible) {
                gt_ids.insert(o.id);
                ++total_gt;
            }
    for (const TrackRecord& r : tracks) {
        pred_ids.insert(r.id);
        ++total_pred;
    }
    if (gt_ids.empty() || pred_ids.empty()) return 0.0;

    const std::vector<int64_t> gl(gt_ids.begin(), gt_ids.end());
    const std::vector<int64_t> pl(pred_ids.begin(), pred_ids.end());
    std::map<int64_t, int> gidx, pidx;
    for (size_t i = 0; i < gl.size(); ++i) gidx[gl[i]] = static_cast<int>(i);
    for (size_t j = 0; j < pl.size(); ++j) pidx[pl[j]] = static_cast<int>(j);

    Mat matches(static_cast<int>(gl.size()), static_cast<int>(pl.size()));
    for (const GtFrame& f : gt) {
        const auto it = preds.find(f.frame);
        if (it == preds.end()) continue;
        for (const GtObject& o : f.objects) {
            if (!o.visible) continue;
            for (const auto& [pid, pbox] : it->second)
                if (iou(o.box, pbox) >= iou_threshold)
                    matches.at(gidx[o.id], pidx[pid]) += 1.0;
        }
    }
    const Assignment best = assign_max(matches);
    double idtp = 0.0;
    for (const auto& [i, j] : best.pairs) idtp += matches.at(i, j);
    return 2.0 * idtp / static_cast<double>(total_gt + total_pred);
}

double average_overlap(const std::vector<GtFrame>& gt, const std::vector<TrackRecord>& tracks) {
    // predicted track = id covering the most frames (lowest id on ties)
    std::map<int64_t, int> coverage;
    for (const TrackRecord& r : tracks) ++coverage[r.id];
    int64_t best_id = -1;
    int best_count = 0;
    for (const auto& [id, count] : coverage)
        if (count > best_count) {
            best_count = count;
            best_id = id;
        }
    std::map<int, Box> pred;
    for (const TrackRecord& r : tracks)
        if (r.id == best_id) pred[r.frame] = r.box;

    double sum = 0.0;
    int frames = 0;
    for (const GtFrame& f : gt) {
        const BoxById gts = visible_gt(f);
        MTK_REQUIRE(gts.size() <= 1, "average_overlap: ground truth must be single-object");
        if (gts.empty()) continue;
        ++frames;
        const auto it = pred.find(f.frame);
        if (it != pred.end()) sum += iou(gts.begin()->second, it->second);
    }
    return frames > 0 ? sum / frames : 0.0;
}

MetricReport evaluate(const std::vector<GtFrame>& gt, const std::vector<TrackRecord>& tracks,
                      double iou_threshold) {
    MetricReport rep;
    const ClearResult clear = clear_mot(gt, tracks, iou_threshold);
    rep.mota = clear.mota;
    rep.fp = clear.fp;
    rep.fn = clear.fn;
    rep.id_switches = clear.id_switches;
    rep.idf1 = idf1(gt, tracks, iou_threshold);
    rep.log = clear.log;
    std::set<int64_t> gt_ids;
    for (const GtFrame& f : gt)
        for (const GtObject& o : f.objects) gt_ids.insert(o.id);
    if (gt_ids.size() == 1) rep.ao = average_overlap(gt, tracks);
    return rep;
}

std::string report_to_json(const MetricReport& r) {
    nlohmann::json j;
    j["mota"] = r.mota ? nlohmann::json(*r.mota) : nlohmann::json(nullptr);
    j["idf1"] = r.idf1;
    j["id_switches"] = r.id_switches;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["ao"] = r.ao ? nlohmann::json(*r.ao) : nlohmann::json(nullptr);
    return j.dump() + "\n";
}

std::string report_to_csv(const MetricReport& r) {
    char buf[256];
    auto fmt = [&](std::optional<double> v) {
        if (!v) return std::string();
        std::snprintf(buf, sizeof(buf), "%.17g", *v);
        return std::string(buf);
    };
    std::string out = "mota,idf1,id_switches,fp,fn,ao\n";
    out += fmt(r.mota) + "," + fmt(r.idf1) + "," + std::to_string(r.id_switches) + "," +
           std::to_string(r.fp) + "," + std::to_string(r.fn) + "," + fmt(r.ao) + "\n";
    return out;
}

} // namespace moetrack
