#include "moetrack/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <unordered_map>

#include "moetrack/roi.hpp"

namespace moetrack {

TrkGraph lift_tracker(Tape& t, TrackerParams& p) {
    TrkGraph g{};
    g.roi_size = p.roi_size;
    g.width = p.width;
    g.embed_dim = p.embed_dim;
    g.query_dim = p.query_dim;
    g.query_tokens = p.query_tokens;
    std::unordered_map<std::string, int> ids;
    for (const ParamRef& ref : collect_params(p)) {
        const int id = t.leaf(*ref.mat, !ref.frozen);
        ids.emplace(ref.name, id);
        g.named.emplace_back(ref.name, id);
    }
    auto id = [&](const char* name) {
        const auto it = ids.find(name);
        MTK_REQUIRE(it != ids.end(), std::string("lift_tracker: missing block ") + name);
        return it->second;
    };
    g.conv1_w = id("tracker.conv1.w");
    g.conv1_b = id("tracker.conv1.b");
    g.conv2_w = id("tracker.conv2.w");
    g.conv2_b = id("tracker.conv2.b");
    g.fc_w = id("tracker.fc.w");
    g.fc_b = id("tracker.fc.b");
    g.pos_w1 = id("tracker.pos.w1");
    g.pos_b1 = id("tracker.pos.b1");
    g.pos_w2 = id("tracker.pos.w2");
    g.pos_b2 = id("tracker.pos.b2");
    g.pool_w = id("tracker.pool.w");
    g.pool_b = id("tracker.pool.b");
    g.self_wq = id("tracker.mem.self.wq");
    g.self_wk = id("tracker.mem.self.wk");
    g.self_wv = id("tracker.mem.self.wv");
    g.self_wo = id("tracker.mem.self.wo");
    g.cross_wq = id("tracker.mem.cross.wq");
    g.cross_wk = id("tracker.mem.cross.wk");
    g.cross_wv = id("tracker.mem.cross.wv");
    g.cross_wo = id("tracker.mem.cross.wo");
    g.qo = id("tracker.qo");
    return g;
}

int t_conv3x3(Tape& t, int x, int g, int w, int b) {
    MTK_REQUIRE(t.val(x).rows == g * g, "t_conv3x3: grid shape mismatch");
    const auto idx = im2col_indices(g);
    std::vector<int> pieces;
    for (int k = 0; k < 9; ++k) pieces.push_back(t.gather_rows(x, idx[static_cast<size_t>(k)]));
    return t_linear(t, t.concat_cols(pieces), w, b);
}

int t_fine_grained(Tape& t, const TrkGraph& g, int roi, const Mat& mask_pooled) {
    const int gsz = g.roi_size;
    const int mask_id = t.leaf(mask_pooled);
    const int lifted = t_conv3x3(t, mask_id, gsz, g.conv1_w, g.conv1_b);
    const int mixed = t_conv3x3(t, t.add(lifted, roi), gsz, g.conv2_w, g.conv2_b);
    const int pooled =
        t.scale(t.matmul(t.leaf(Mat(1, gsz * gsz, 1.0)), mixed), 1.0 / (gsz * gsz));
    return t_linear(t, pooled, g.fc_w, g.fc_b);
}

int t_position_aware(Tape& t, const TrkGraph& g, const Box& box, int roi) {
    Mat v(1, 4);
    v.at(0, 0) = box.cx;
    v.at(0, 1) = box.cy;
    v.at(0, 2) = box.w;
    v.at(0, 3) = box.h;
    const int h = t.gelu(t_linear(t, t.leaf(std::move(v)), g.pos_w1, g.pos_b1));
    const int pos = t_linear(t, h, g.pos_w2, g.pos_b2);
    const int rows = t.val(roi).rows;
    const int pooled = t.scale(t.matmul(t.leaf(Mat(1, rows, 1.0)), roi), 1.0 / rows);
    return t.add(pos, t_linear(t, pooled, g.pool_w, g.pool_b));
}

std::vector<int> t_mem_queries(Tape& t, const TrkGraph& g, const std::vector<int>& ap_ids) {
    std::vector<int> out;
    const int m = static_cast<int>(ap_ids.size());
    if (m == 0) return out;
    std::vector<int> stack(static_cast<size_t>(m), g.qo);
    const int x0 = m == 1 ? g.qo : t.concat_rows(stack);
    const int attn = t.matmul(
        t_attention(t, t.matmul(x0, g.self_wq), t.matmul(x0, g.self_wk), t.matmul(x0, g.self_wv)),
        g.self_wo);
    const int x1 = t.add(x0, attn);
    const int nq = g.query_tokens;
    for (int i = 0; i < m; ++i) {
        std::vector<int> rows(static_cast<size_t>(nq));
        for (int r = 0; r < nq; ++r) rows[static_cast<size_t>(r)] = i * nq + r;
        const int xi = t.gather_rows(x1, rows);
        const int ap = ap_ids[static_cast<size_t>(i)];
        const int cross = t.matmul(t_attention(t, t.matmul(xi, g.cross_wq),
                                               t.matmul(ap, g.cross_wk),
                                               t.matmul(ap, g.cross_wv)),
                                   g.cross_wo);
        out.push_back(t.add(xi, cross));
    }
    return out;
}

int t_comprehensive(Tape& t, const TrkGraph& g, int ae, int q) {
    const int flat = t.reshape(q, 1, g.query_tokens * g.query_dim);
    return t_l2_normalize_rows(t, t.concat_cols({ae, flat}));
}

int t_similarity(Tape& t, int reps, int feats) {
    const int d = t.matmul(reps, t.transpose(feats));  // N x M
    const int over_cands = t.softmax_rows(d);
    const int over_tracks = t.transpose(t.softmax_rows(t.transpose(d)));
    const int s1 = t.scale(t.add(over_cands, over_tracks), 0.5);
    return t.scale(t.add(s1, d), 0.5);  // rows are unit vectors, d is the cosine
}

namespace {

struct AssocCandidate {
    Box box;
    Mat mask_pooled;  // (G*G) x 1
    Mat roi_sample;   // (G*G) x (fh*fw) sampling matrix
    double score = 1.0;
};

int t_neglog_element(Tape& t, int a, int i, int j) {
    return t.scale(t.log(t.clamp_min(t.element(a, i, j), 1e-12)), -1.0);
}

/// Build every candidate's comprehensive feature for one frame and stack rows.
int build_frame_features(Tape& t, const TrkGraph& tg, const std::vector<AssocCandidate>& cands,
                         int f_u, const Mat* roi_noise) {
    std::vector<int> roi_ids, ap_ids;
    for (size_t i = 0; i < cands.size(); ++i) {
        int roi = t.matmul(t.leaf(cands[i].roi_sample), f_u);
        if (roi_noise) roi = t.add(roi, t.leaf(roi_noise[i]));
        roi_ids.push_back(roi);
        ap_ids.push_back(t_position_aware(t, tg, cands[i].box, roi));
    }
    const std::vector<int> queries = t_mem_queries(t, tg, ap_ids);
    std::vector<int> feats;
    for (size_t i = 0; i < cands.size(); ++i) {
        const int ae = t_fine_grained(t, tg, roi_ids[i], cands[i].mask_pooled);
        feats.push_back(t_comprehensive(t, tg, ae, queries[i]));
    }
    return feats.size() == 1 ? feats[0] : t.concat_rows(feats);
}

} // namespace

TrainResult train_toy(const RunConfig& cfg, EncoderParams& enc, TrackerParams& trk, int steps,
                      const std::function<void(int, const StepLosses&)>& on_step) {
    MTK_REQUIRE(steps >= 1, "train_toy: steps must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.sim.n_frames >= 2, "train_toy: need at least two frames");
    MTK_CONFIG_REQUIRE(cfg.sim.n_objects >= 1, "train_toy: need at least one object");
    const SimSequence seq = generate_sequence(cfg.sim);
    const bool tde_present = cfg.sim.modality != ModalityPair::RgbOnly;
    const int fh = cfg.sim.height / cfg.encoder.patch;
    const int fw = cfg.sim.width / cfg.encoder.patch;
    const int n_tokens = fh * fw;
    const int gsz = trk.roi_size;
    const double lr = cfg.train.step_size;
    Rng aug_rng = Rng::stream(cfg.seed, 0x617567ULL);

    TrainResult result;
    for (int step = 0; step < steps; ++step) {
        const int t_cur = 1 + step % (cfg.sim.n_frames - 1);
        const int t_prev = t_cur - 1;

        Tape tape;
        EncGraph eg = lift_encoder(tape, enc);
        TrkGraph tg = lift_tracker(tape, trk);

        const Mat& fr = seq.frames_r[static_cast<size_t>(t_cur)];
        const Mat* ft = tde_present ? &seq.frames_tde[static_cast<size_t>(t_cur)] : nullptr;
        const Mat& fr_prev = seq.frames_r[static_cast<size_t>(t_prev)];
        const Mat* ft_prev = tde_present ? &seq.frames_tde[static_cast<size_t>(t_prev)] : nullptr;

        // mixture losses on the current frame
        const TapeForward clean = tape_encoder_forward(tape, eg, fr, ft);
        const int l_ce = tape_loss_ce(tape, clean, tde_present, n_tokens);
        const int l_task = tape_loss_task(tape, clean, cfg.sim.modality);
        CmTargets targets;
        for (const TapeLayerOut& lo : clean.layers)
            targets.emplace_back(tape.val(lo.hg_r), tape.val(lo.hg_tde));
        const MaskPlan plan = make_mask_plan(n_tokens, enc.depth, cfg.encoder.mask_ratio,
                                             cfg.seed + static_cast<uint64_t>(step));
        const TapeForward masked = tape_encoder_forward(tape, eg, fr, ft, &plan);
        int l_cm = tape.leaf(Mat(1, 1), false);
        for (size_t l = 0; l < masked.layers.size(); ++l) {
            l_cm = tape.add(l_cm, t_mse_vs_const(tape, masked.layers[l].hg_r, targets[l].first));
            l_cm =
                tape.add(l_cm, t_mse_vs_const(tape, masked.layers[l].hg_tde, targets[l].second));
        }

        // association instances: objects visible in both frames, gt order
        const TapeForward prev_fwd = tape_encoder_forward(tape, eg, fr_prev, ft_prev);
        std::vector<AssocCandidate> prev_c, cur_c, aug_c;
        std::vector<Mat> aug_noise;
        for (size_t i = 0; i < seq.gt[static_cast<size_t>(t_cur)].objects.size(); ++i) {
            const GtObject& oc = seq.gt[static_cast<size_t>(t_cur)].objects[i];
            const GtObject& op = seq.gt[static_cast<size_t>(t_prev)].objects[i];
            if (!oc.visible || !op.visible) continue;
            prev_c.push_back({op.box, mask_box_pool(op.mask, op.box, gsz),
                              roi_sampling_matrix(fh, fw, op.box, gsz), 1.0});
            cur_c.push_back({oc.box, mask_box_pool(oc.mask, oc.box, gsz),
                             roi_sampling_matrix(fh, fw, oc.box, gsz), 1.0});
            // augmented twin: translated box, jittered score, feature noise
            Box ab = oc.box;
            ab.cx = std::clamp(ab.cx + aug_rng.uniform(-cfg.tracker.aug_translate,
                                                       cfg.tracker.aug_translate),
                               ab.w / 2, 1.0 - ab.w / 2);
            ab.cy = std::clamp(ab.cy + aug_rng.uniform(-cfg.tracker.aug_translate,
                                                       cfg.tracker.aug_translate),
                               ab.h / 2, 1.0 - ab.h / 2);
            const double jitter = aug_rng.uniform(-cfg.tracker.aug_score_jitter,
                                                  cfg.tracker.aug_score_jitter);
            aug_c.push_back({ab, mask_box_pool(oc.mask, ab, gsz),
                             roi_sampling_matrix(fh, fw, ab, gsz), 1.0 + jitter});
            Mat noise(gsz * gsz, trk.width);
            for (double& v : noise.d) v = aug_rng.normal(0.0, cfg.tracker.aug_feature_noise);
            aug_noise.push_back(std::move(noise));
        }
        MTK_REQUIRE(!cur_c.empty(), "train_toy: no co-visible objects in a frame pair");

        const int f_prev = build_frame_features(tape, tg, prev_c, prev_fwd.f_u, nullptr);
        const int f_cur = build_frame_features(tape, tg, cur_c, clean.f_u, nullptr);
        const int f_aug = build_frame_features(tape, tg, aug_c, clean.f_u, aug_noise.data());

        const int a = t_similarity(tape, f_prev, f_cur);
        const int l_sup = t_neglog_element(tape, a, 0, 0);
        const int a_aug = t_similarity(tape, f_aug, f_cur);
        int l_self = tape.leaf(Mat(1, 1), false);
        for (int i = 0; i < static_cast<int>(cur_c.size()); ++i)
            l_self = tape.add(l_self, t_neglog_element(tape, a_aug, i, i));
        // binary cross-entropy against the identity correspondence
        const int n = static_cast<int>(prev_c.size());
        const int m = static_cast<int>(cur_c.size());
        Mat gt_m(n, m);
        for (int i = 0; i < std::min(n, m); ++i) gt_m.at(i, i) = 1.0;
        Mat inv_gt(n, m, 1.0);
        for (size_t i = 0; i < gt_m.size(); ++i) inv_gt.d[i] -= gt_m.d[i];
        const int g_id = tape.leaf(gt_m);
        const int ig_id = tape.leaf(std::move(inv_gt));
        const int ones_nm = tape.leaf(Mat(n, m, 1.0));
        const int term1 = tape.hadamard(g_id, tape.log(tape.clamp_min(a, 1e-12)));
        const int term2 = tape.hadamard(
            ig_id, tape.log(tape.clamp_min(tape.sub(ones_nm, a), 1e-12)));
        const int l_tamot =
            tape.scale(tape.sum_all(tape.add(term1, term2)), -1.0 / (n * m));

        int total = tape.add(tape.scale(l_cm, cfg.encoder.mu), tape.scale(l_ce, cfg.encoder.lambda));
        total = tape.add(total, l_task);
        total = tape.add(total, l_sup);
        total = tape.add(total, l_self);
        total = tape.add(total, l_tamot);

        StepLosses losses;
        losses.l_cm = tape.val(l_cm).at(0, 0);
        losses.l_ce = tape.val(l_ce).at(0, 0);
        losses.l_task = tape.val(l_task).at(0, 0);
        losses.l_sup = tape.val(l_sup).at(0, 0);
        losses.l_self = tape.val(l_self).at(0, 0);
        losses.l_tamot = tape.val(l_tamot).at(0, 0);
        losses.total = tape.val(total).at(0, 0);
        result.curve.push_back(losses);
        if (!std::isfinite(losses.total)) {
            result.diverged = true;
            result.diverged_step = step;
            return result;
        }
        if (on_step) on_step(step, losses);

        tape.backward(total);
        ParamRegistry reg = collect_params(enc);
        const ParamRegistry treg = collect_params(trk);
        reg.insert(reg.end(), treg.begin(), treg.end());
        std::unordered_map<std::string, int> ids;
        for (const auto& [name, id] : eg.named) ids.emplace(name, id);
        for (const auto& [name, id] : tg.named) ids.emplace(name, id);
        for (const ParamRef& p : reg) {
            if (p.frozen) continue;
            const int id = ids.at(p.name);
            if (!tape.has_grad(id)) continue;
            const Mat& g = tape.grad(id);
            for (size_t i = 0; i < p.mat->size(); ++i) p.mat->d[i] -= lr * g.d[i];
        }
    }
    return result;
}

std::string losses_to_csv(const std::vector<StepLosses>& curve) {
    std::string out = "step,l_cm,l_ce,l_task,total\n";
    char buf[512];
    for (size_t s = 0; s < curve.size(); ++s) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", s, curve[s].l_cm,
                      curve[s].l_ce, curve[s].l_task, curve[s].total);
        out += buf;
    }
    return out;
}

std::vector<uint8_t> snapshot_frozen(EncoderParams& enc) {
    std::vector<uint8_t> bytes;
    for (const ParamRef& p : collect_params(enc)) {
        if (!p.frozen) continue;
        const size_t off = bytes.size();
        bytes.resize(off + p.mat->size() * sizeof(double));
        std::memcpy(bytes.data() + off, p.mat->d.data(), p.mat->size() * sizeof(double));
    }
    return bytes;
}

} // namespace moetrack
