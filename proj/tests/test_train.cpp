#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "moetrack/roi.hpp"
#include "moetrack/train.hpp"

using namespace moetrack;

namespace {

RunConfig tiny_config() {
    RunConfig cfg = config_from_json_text(R"({
        "seed": 11,
        "encoder": {"width": 8, "depth": 1, "patch": 4, "heads": 2,
                     "common_experts": 2, "specific_experts": 2, "k_active": 1},
        "tracker": {"roi_size": 3, "embed_dim": 4, "query_dim": 4, "query_tokens": 2},
        "sim": {"objects": 2, "frames": 6, "height": 16, "width": 16,
                 "object_size": 0.2, "sigma_pos": 0.0, "miss_rate": 0.0}
    })");
    return cfg;
}

} // namespace

TEST_CASE("tape association features equal the plain head") {
    Rng rng(42);
    const int g = 3, width = 6, de = 4, cq = 4, nq = 2;
    TrackerParams trk = init_tracker(g, width, de, cq, nq, rng);

    // two candidates with random RoI grids and boxes
    Mat fmap(16, width);
    for (double& v : fmap.d) v = rng.normal();
    const Box b0{0.3, 0.4, 0.3, 0.3};
    const Box b1{0.7, 0.6, 0.25, 0.25};
    BinMask mask(8, 8);
    for (int y = 2; y < 6; ++y)
        for (int x = 2; x < 6; ++x) mask.set(y, x, 1);

    // plain path
    const Mat roi0 = roi_align(fmap, 4, 4, b0, g);
    const Mat roi1 = roi_align(fmap, 4, 4, b1, g);
    const Mat mp0 = mask_box_pool(mask, b0, g);
    const Mat mp1 = mask_box_pool(mask, b1, g);
    const Mat ap0 = position_aware_embedding(trk, b0, roi0);
    const Mat ap1 = position_aware_embedding(trk, b1, roi1);
    const MemOut mem = mem_forward(trk, {ap0, ap1}, {});
    const Vec f0 = comprehensive_feature(fine_grained_embedding(trk, roi0, mp0), mem.q[0]);
    const Vec f1 = comprehensive_feature(fine_grained_embedding(trk, roi1, mp1), mem.q[1]);

    // tape path
    Tape t;
    TrkGraph tg = lift_tracker(t, trk);
    const int fm = t.leaf(fmap);
    const int troi0 = t.matmul(t.leaf(roi_sampling_matrix(4, 4, b0, g)), fm);
    const int troi1 = t.matmul(t.leaf(roi_sampling_matrix(4, 4, b1, g)), fm);
    const int tap0 = t_position_aware(t, tg, b0, troi0);
    const int tap1 = t_position_aware(t, tg, b1, troi1);
    const std::vector<int> q = t_mem_queries(t, tg, {tap0, tap1});
    const int tf0 = t_comprehensive(t, tg, t_fine_grained(t, tg, troi0, mp0), q[0]);
    const int tf1 = t_comprehensive(t, tg, t_fine_grained(t, tg, troi1, mp1), q[1]);

    for (size_t i = 0; i < f0.size(); ++i) {
        CHECK(std::fabs(t.val(tf0).at(0, static_cast<int>(i)) - f0[i]) < 1e-13);
        CHECK(std::fabs(t.val(tf1).at(0, static_cast<int>(i)) - f1[i]) < 1e-13);
    }

    // tape similarity equals the plain matrix
    const int a_id = t_similarity(t, t.concat_rows({tf0, tf1}), t.concat_rows({tf0, tf1}));
    const Mat a_plain = similarity_matrix({f0, f1}, {f0, f1});
    CHECK(max_abs_diff(t.val(a_id), a_plain) < 1e-12);
}

TEST_CASE("association graph gradients match finite differences") {
    Rng rng(17);
    const int g = 2, width = 4, de = 3, cq = 3, nq = 2;
    TrackerParams trk = init_tracker(g, width, de, cq, nq, rng);
    Mat fmap(16, width);
    for (double& v : fmap.d) v = rng.normal();
    const Box b0{0.3, 0.4, 0.3, 0.3};
    const Box b1{0.65, 0.6, 0.25, 0.25};
    const Mat mp(g * g, 1, 0.5);

    auto build = [&](Tape& t, TrkGraph& tg) {
        const int fm = t.leaf(fmap);
        const int r0 = t.matmul(t.leaf(roi_sampling_matrix(4, 4, b0, g)), fm);
        const int r1 = t.matmul(t.leaf(roi_sampling_matrix(4, 4, b1, g)), fm);
        const std::vector<int> q =
            t_mem_queries(t, tg, {t_position_aware(t, tg, b0, r0), t_position_aware(t, tg, b1, r1)});
        const int f0 = t_comprehensive(t, tg, t_fine_grained(t, tg, r0, mp), q[0]);
        const int f1 = t_comprehensive(t, tg, t_fine_grained(t, tg, r1, mp), q[1]);
        const int a = t_similarity(t, t.concat_rows({f0, f1}), t.concat_rows({f0, f1}));
        // -log A00 - log A11 plus the binary CE against identity
        int loss = t.scale(t.log(t.clamp_min(t.element(a, 0, 0), 1e-12)), -1.0);
        loss = t.add(loss, t.scale(t.log(t.clamp_min(t.element(a, 1, 1), 1e-12)), -1.0));
        Mat gt(2, 2);
        gt.at(0, 0) = gt.at(1, 1) = 1.0;
        Mat ig(2, 2, 1.0);
        ig.at(0, 0) = ig.at(1, 1) = 0.0;
        const int ones = t.leaf(Mat(2, 2, 1.0));
        const int t1 = t.hadamard(t.leaf(gt), t.log(t.clamp_min(a, 1e-12)));
        const int t2 = t.hadamard(t.leaf(ig), t.log(t.clamp_min(t.sub(ones, a), 1e-12)));
        loss = t.add(loss, t.scale(t.sum_all(t.add(t1, t2)), -0.25));
        return loss;
    };

    // analytic
    Tape t;
    TrkGraph tg = lift_tracker(t, trk);
    const int loss = build(t, tg);
    t.backward(loss);
    std::map<std::string, Mat> analytic;
    for (const auto& [name, id] : tg.named)
        analytic.emplace(name, t.has_grad(id) ? t.grad(id)
                                              : Mat(t.val(id).rows, t.val(id).cols));

    auto eval = [&]() {
        Tape t2;
        TrkGraph tg2 = lift_tracker(t2, trk);
        return t2.val(build(t2, tg2)).at(0, 0);
    };
    const GradCheckReport rep = grad_check_fd(collect_params(trk), eval, analytic, 1e-6, 2e-5);
    CHECK(rep.pass);
    CHECK(rep.worst < 2e-5);
}

TEST_CASE("short toy training run") {
    RunConfig cfg = tiny_config();
    Rng rng(cfg.seed);
    EncoderParams enc = init_encoder(cfg.encoder.width, cfg.encoder.depth, cfg.encoder.patch,
                                     cfg.encoder.heads, cfg.encoder.common_experts,
                                     cfg.encoder.specific_experts, cfg.encoder.k_active, rng);
    TrackerParams trk = init_tracker(cfg.tracker.roi_size, cfg.encoder.width,
                                     cfg.tracker.embed_dim, cfg.tracker.query_dim,
                                     cfg.tracker.query_tokens, rng);

    const std::vector<uint8_t> frozen_before = snapshot_frozen(enc);
    const TrainResult result = train_toy(cfg, enc, trk, 40);
    CHECK_FALSE(result.diverged);
    REQUIRE(result.curve.size() == 40);
    for (const StepLosses& s : result.curve) {
        CHECK(std::isfinite(s.total));
        CHECK(s.l_cm >= 0.0);
        CHECK(s.l_ce >= 0.0);
        CHECK(s.l_task >= 0.0);
    }
    // the orthogonality and router losses move down on this horizon
    CHECK(result.curve.back().l_ce < result.curve.front().l_ce);
    CHECK(result.curve.back().l_task < result.curve.front().l_task);

    // frozen shared expert is bit-identical after training
    CHECK(snapshot_frozen(enc) == frozen_before);

    // csv shape
    const std::string csv = losses_to_csv(result.curve);
    CHECK(csv.find("step,l_cm,l_ce,l_task,total\n") == 0);

    // determinism: same config and seeds reproduce the curve exactly
    Rng rng2(cfg.seed);
    EncoderParams enc2 = init_encoder(cfg.encoder.width, cfg.encoder.depth, cfg.encoder.patch,
                                      cfg.encoder.heads, cfg.encoder.common_experts,
                                      cfg.encoder.specific_experts, cfg.encoder.k_active, rng2);
    TrackerParams trk2 = init_tracker(cfg.tracker.roi_size, cfg.encoder.width,
                                      cfg.tracker.embed_dim, cfg.tracker.query_dim,
                                      cfg.tracker.query_tokens, rng2);
    const TrainResult result2 = train_toy(cfg, enc2, trk2, 40);
    CHECK(losses_to_csv(result2.curve) == losses_to_csv(result.curve));
}
