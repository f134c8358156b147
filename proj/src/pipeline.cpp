#include "moetrack/pipeline.hpp"

#include <algorithm>

#include "moetrack/roi.hpp"

namespace moetrack {

std::vector<Candidate> generate_candidates_sot(const std::vector<Detection>& dets,
                                               double tau_mask) {
    std::vector<Candidate> out;
    for (const Detection& d : dets) {
        if (!(d.s_occ > 0.0)) continue;
        if (d.s_mask < tau_mask) continue;  // inclusive keep at the threshold
        Candidate c{d.box, d.mask, d.s_mask, d.s_occ, d.feature};
        if (!d.mask.empty() && d.mask.count() > 0) c.box = mask_tight_box(d.mask);
        require_box(c.box, "generate_candidates_sot");
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<Candidate> generate_candidates_mot(const std::vector<Detection>& dets,
                                               double score_floor) {
    std::vector<Candidate> out;
    for (const Detection& d : dets) {
        if (d.s_mask < score_floor) continue;
        Candidate c{d.box, d.mask, d.s_mask, d.s_occ, d.feature};
        if (!d.mask.empty() && d.mask.count() > 0) c.box = mask_tight_box(d.mask);
        require_box(c.box, "generate_candidates_mot");
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

struct CandFeatures {
    Vec f;
    Mat q;  // empty when the explicit-feature path was taken
};

CandFeatures candidate_features(const TrackerConfig& cfg, const TrackerParams& params,
                                const Candidate& c, const Mat& q_learned, const Mat* f_u,
                                int fh, int fw) {
    CandFeatures out;
    if (c.feature) {
        out.f = l2_normalize(*c.feature);
        return out;
    }
    const int g = cfg.roi_size;
    Mat roi_feat;
    if (f_u) {
        roi_feat = roi_align(*f_u, fh, fw, c.box, g);
    } else {
        // no feature map: replicate the pooled mask raster across channels
        const Mat pooled = c.mask.empty() ? Mat(g * g, 1, 1.0)
                                          : mask_box_pool(c.mask, c.box, g);
        roi_feat = Mat(g * g, params.width);
        for (int r = 0; r < g * g; ++r)
            for (int ch = 0; ch < params.width; ++ch) roi_feat.at(r, ch) = pooled.at(r, 0);
    }
    const Mat pooled_mask =
        c.mask.empty() ? Mat(g * g, 1, 1.0) : mask_box_pool(c.mask, c.box, g);
    const Mat ae = fine_grained_embedding(params, roi_feat, pooled_mask);
    out.f = comprehensive_feature(ae, q_learned);
    out.q = q_learned;
    return out;
}

} // namespace

FrameResult TrackPipeline::step(int frame, const std::vector<Detection>& dets, const Mat* f_u,
                                int fh, int fw) {
    std::vector<Candidate> cands = cfg_.mode == TrackMode::Sot
                                       ? generate_candidates_sot(dets, cfg_.tau_mask)
                                       : generate_candidates_mot(dets, cfg_.score_floor);

    // learned queries for every candidate that needs the head
    std::vector<int> head_idx;
    std::vector<Mat> ap_list;
    for (int ci = 0; ci < static_cast<int>(cands.size()); ++ci) {
        const Candidate& c = cands[static_cast<size_t>(ci)];
        if (c.feature) continue;
        const int g = cfg_.roi_size;
        Mat roi_feat;
        if (f_u) {
            roi_feat = roi_align(*f_u, fh, fw, c.box, g);
        } else {
            const Mat pooled = c.mask.empty() ? Mat(g * g, 1, 1.0)
                                              : mask_box_pool(c.mask, c.box, g);
            roi_feat = Mat(g * g, params_.width);
            for (int r = 0; r < g * g; ++r)
                for (int ch = 0; ch < params_.width; ++ch) roi_feat.at(r, ch) = pooled.at(r, 0);
        }
        ap_list.push_back(position_aware_embedding(params_, c.box, roi_feat));
        head_idx.push_back(ci);
    }
    std::vector<std::vector<Mat>> no_history;
    const MemOut mem = mem_forward(params_, ap_list, no_history);

    std::vector<CandidateUpdate> updates(cands.size());
    Mat empty_q;
    std::vector<Vec> feats(cands.size());
    for (int ci = 0; ci < static_cast<int>(cands.size()); ++ci) {
        const Candidate& c = cands[static_cast<size_t>(ci)];
        const auto it = std::find(head_idx.begin(), head_idx.end(), ci);
        const Mat& q = it == head_idx.end()
                           ? empty_q
                           : mem.q[static_cast<size_t>(it - head_idx.begin())];
        const CandFeatures cf = candidate_features(cfg_, params_, c, q, f_u, fh, fw);
        feats[static_cast<size_t>(ci)] = cf.f;
        updates[static_cast<size_t>(ci)] = {cf.f, cf.q, c.box, c.s_mask, c.s_occ};
    }

    // similarity + matching
    std::vector<std::pair<int, int>> matched;
    Mat a;
    const std::vector<Tracklet>& tracks = store_.active();
    if (!tracks.empty() && !cands.empty()) {
        std::vector<Vec> reps;
        reps.reserve(tracks.size());
        for (const Tracklet& t : tracks) {
            std::vector<Vec> hist;
            for (const auto& [fr, f] : t.history) hist.push_back(f);
            reps.push_back(tracklet_representative(hist));
        }
        a = similarity_matrix(reps, feats);
        if (cfg_.mode == TrackMode::Sot && sot_target_id_ >= 0) {
            // the target picks its argmax candidate first, the rest go Hungarian
            int target_row = -1;
            for (int i = 0; i < static_cast<int>(tracks.size()); ++i)
                if (tracks[static_cast<size_t>(i)].id == sot_target_id_) target_row = i;
            int best_col = -1;
            if (target_row >= 0) {
                for (int j = 0; j < a.cols; ++j)
                    if (best_col < 0 || a.at(target_row, j) > a.at(target_row, best_col))
                        best_col = j;
                if (best_col >= 0 && a.at(target_row, best_col) > cfg_.tau_th)
                    matched.emplace_back(target_row, best_col);
                else
                    best_col = -1;
            }
            // Hungarian over the remaining rows and columns
            std::vector<int> rows, cols;
            for (int i = 0; i < a.rows; ++i)
                if (i != target_row) rows.push_back(i);
            for (int j = 0; j < a.cols; ++j)
                if (j != best_col) cols.push_back(j);
            if (!rows.empty() && !cols.empty()) {
                Mat sub(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
                for (size_t i = 0; i < rows.size(); ++i)
                    for (size_t j = 0; j < cols.size(); ++j)
                        sub.at(static_cast<int>(i), static_cast<int>(j)) =
                            a.at(rows[i], cols[j]);
                for (const auto& [si, sj] : match(sub, cfg_.tau_th).pairs)
                    matched.emplace_back(rows[static_cast<size_t>(si)],
                                         cols[static_cast<size_t>(sj)]);
            }
        } else {
            matched = match(a, cfg_.tau_th).pairs;
        }
    }

    const FrameResult result = store_.update(frame, matched, updates);

    // SOT: bind the target id on the first frame with a prior
    if (cfg_.mode == TrackMode::Sot && sot_target_id_ < 0 && sot_prior_ && !cands.empty()) {
        double best = -1.0;
        int best_ci = 0;
        for (int ci = 0; ci < static_cast<int>(cands.size()); ++ci) {
            const double ov = iou(cands[static_cast<size_t>(ci)].box, *sot_prior_);
            if (ov > best) {
                best = ov;
                best_ci = ci;
            }
        }
        for (const auto& [id, ci] : result.new_ids)
            if (ci == best_ci) sot_target_id_ = id;
        for (const auto& [id, ci] : result.matches)
            if (ci == best_ci) sot_target_id_ = id;
    }

    // emit track records: matched pairs carry their affinity, fresh ids 1.0
    for (const auto& [id, ci] : result.matches) {
        double affinity = 1.0;
        for (const auto& [ti, cj] : matched)
            if (cj == ci) affinity = a.at(ti, cj);
        records_.push_back({frame, id, cands[static_cast<size_t>(ci)].box, affinity});
    }
    for (const auto& [id, ci] : result.new_ids)
        records_.push_back({frame, id, cands[static_cast<size_t>(ci)].box, 1.0});
    std::stable_sort(records_.end() - static_cast<long>(result.matches.size() +
                                                        result.new_ids.size()),
                     records_.end(),
                     [](const TrackRecord& x, const TrackRecord& y) { return x.id < y.id; });

    // refresh temporal summaries for tracklets with usable query histories
    std::vector<std::vector<Mat>> histories;
    for (const Tracklet& t : store_.active()) {
        std::vector<Mat> h;
        bool ok = !t.q_history.empty();
        for (const Mat& q : t.q_history) ok = ok && q.size() > 0;
        if (ok)
            h.assign(t.q_history.begin(), t.q_history.end());
        histories.push_back(std::move(h));
    }
    (void)mem_forward(params_, {}, histories);

    return result;
}

SequenceResult track_sequence(const TrackerConfig& cfg, const TrackerParams& params,
                              const std::vector<FrameDetections>& stream) {
    TrackPipeline pipe(cfg, params);
    if (cfg.mode == TrackMode::Sot) {
        // default prior: the strongest detection of the first frame
        for (const FrameDetections& fd : stream) {
            if (fd.detections.empty()) continue;
            int best = 0;
            for (int i = 1; i < static_cast<int>(fd.detections.size()); ++i)
                if (fd.detections[static_cast<size_t>(i)].s_mask >
                    fd.detections[static_cast<size_t>(best)].s_mask)
                    best = i;
            pipe.set_sot_prior(fd.detections[static_cast<size_t>(best)].box);
            break;
        }
    }
    SequenceResult out;
    for (const FrameDetections& fd : stream) out.frames.push_back(pipe.step(fd.frame, fd.detections));
    out.records = pipe.records();
    out.sot_target_id = pipe.sot_target_id();
    return out;
}

SequenceResult track_sequence_frames(const TrackerConfig& cfg, const TrackerParams& params,
                                     const EncoderParams& enc,
                                     const std::vector<FrameDetections>& stream,
                                     const std::vector<Mat>& frames_r,
                                     const std::vector<Mat>* frames_tde, bool use_f32) {
    MTK_REQUIRE(stream.size() == frames_r.size(), "track_sequence_frames: stream size mismatch");
    if (frames_tde)
        MTK_REQUIRE(frames_tde->size() == frames_r.size(),
                    "track_sequence_frames: modality frame count mismatch");
    TrackPipeline pipe(cfg, params);
    std::optional<EncoderT<float>> enc32;
    if (use_f32) enc32 = to_f32(enc);
    SequenceResult out;
    for (size_t k = 0; k < stream.size(); ++k) {
        const Mat& fr = frames_r[k];
        const Mat* ft = frames_tde ? &(*frames_tde)[k] : nullptr;
        Mat f_u;
        if (use_f32) {
            const Mat32 fr32 = cast_mat<float>(fr);
            Mat32 ft32;
            if (ft) ft32 = cast_mat<float>(*ft);
            f_u = to_f64(encoder_forward(*enc32, fr32, ft ? &ft32 : nullptr));
        } else {
            f_u = encoder_forward(enc, fr, ft);
        }
        const int fh = fr.rows / enc.patch;
        const int fw = fr.cols / enc.patch;
        out.frames.push_back(pipe.step(stream[k].frame, stream[k].detections, &f_u, fh, fw));
    }
    out.records = pipe.records();
    out.sot_target_id = pipe.sot_target_id();
    return out;
}

} // namespace moetrack
