#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "moetrack/sim.hpp"

using namespace moetrack;

namespace {

SceneConfig small_scene() {
    SceneConfig cfg;
    cfg.n_objects = 3;
    cfg.n_frames = 20;
    cfg.height = 32;
    cfg.width = 32;
    cfg.mask_height = 32;
    cfg.mask_width = 32;
    cfg.object_size = 0.15;
    cfg.seed = 5;
    return cfg;
}

} // namespace

TEST_CASE("scene validation") {
    SceneConfig cfg = small_scene();
    cfg.miss_rate = 1.0;
    CHECK_THROWS_AS(validate_scene(cfg), config_error);
    cfg = small_scene();
    cfg.occlusions.push_back({0, 18, 5});
    CHECK_THROWS_AS(validate_scene(cfg), config_error);
    cfg = small_scene();
    cfg.n_objects = 9;
    cfg.object_size = 0.2;  // 9 lanes of 1/9 < 0.2: infeasible density
    CHECK_THROWS_AS(validate_scene(cfg), config_error);
    cfg = small_scene();
    cfg.n_objects = 0;
    const SimSequence seq = generate_sequence(cfg);  // empty ground truth is valid
    CHECK(seq.gt.size() == 20);
    for (const GtFrame& f : seq.gt) CHECK(f.objects.empty());
}

TEST_CASE("linear motion without noise is an exact arithmetic progression") {
    SceneConfig cfg = small_scene();
    cfg.motion = MotionModel::Linear;
    const SimSequence seq = generate_sequence(cfg);
    for (int i = 0; i < cfg.n_objects; ++i) {
        const double step = seq.gt[1].objects[static_cast<size_t>(i)].box.cx -
                            seq.gt[0].objects[static_cast<size_t>(i)].box.cx;
        for (int f = 1; f < cfg.n_frames; ++f) {
            const double expect = seq.gt[0].objects[static_cast<size_t>(i)].box.cx + step * f;
            CHECK(seq.gt[static_cast<size_t>(f)].objects[static_cast<size_t>(i)].box.cx ==
                  doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("generation is deterministic and masks stay disjoint") {
    const SceneConfig cfg = small_scene();
    const SimSequence a = generate_sequence(cfg);
    const SimSequence b = generate_sequence(cfg);
    const std::string wa = ground_truth_to_string(cfg.mask_height, cfg.mask_width, a.gt);
    const std::string wb = ground_truth_to_string(cfg.mask_height, cfg.mask_width, b.gt);
    CHECK(wa == wb);
    for (size_t f = 0; f < a.frames_r.size(); ++f) {
        CHECK(a.frames_r[f].d == b.frames_r[f].d);
        CHECK(a.frames_tde[f].d == b.frames_tde[f].d);
    }

    // ids stable over lifetime
    for (const GtFrame& f : a.gt)
        for (size_t i = 0; i < f.objects.size(); ++i)
            CHECK(f.objects[i].id == static_cast<int64_t>(i));
}

TEST_CASE("appearance vectors respect the separation margin") {
    SceneConfig cfg = small_scene();
    cfg.appearance_margin = 0.5;
    const SimSequence seq = generate_sequence(cfg);
    for (size_t i = 0; i < seq.appearance.size(); ++i)
        for (size_t j = i + 1; j < seq.appearance.size(); ++j) {
            double d2 = 0.0;
            for (size_t k = 0; k < seq.appearance[i].size(); ++k) {
                const double d = seq.appearance[i][k] - seq.appearance[j][k];
                d2 += d * d;
            }
            CHECK(std::sqrt(d2) >= 0.5);
        }
    // paired objects share the rendered RGB value but not the auxiliary one
    CHECK(seq.value_r[0] == seq.value_r[1]);
    CHECK(seq.value_tde[0] != seq.value_tde[1]);
}

TEST_CASE("oracle detector") {
    SceneConfig cfg = small_scene();
    cfg.sigma_pos = 0.0;
    cfg.miss_rate = 0.0;
    SimSequence seq = generate_sequence(cfg);
    std::vector<std::vector<int>> prov;
    auto dets = oracle_detect(seq, cfg, &prov);
    REQUIRE(dets.size() == seq.gt.size());
    for (size_t f = 0; f < dets.size(); ++f) {
        REQUIRE(dets[f].detections.size() == 3);
        for (size_t k = 0; k < dets[f].detections.size(); ++k) {
            const Detection& d = dets[f].detections[k];
            const GtObject& o = seq.gt[f].objects[static_cast<size_t>(prov[f][k])];
            CHECK(d.box.cx == doctest::Approx(o.box.cx));  // exact at sigma 0
            CHECK(d.s_mask >= 0.8);
            CHECK(d.s_mask <= 1.0);
            CHECK(d.s_occ == 1.0);
            REQUIRE(d.feature.has_value());
        }
    }

    // occluded objects emit nothing with positive occlusion score
    cfg.occlusions.push_back({1, 5, 10});
    seq = generate_sequence(cfg);
    dets = oracle_detect(seq, cfg, &prov);
    for (int f = 5; f < 15; ++f) {
        for (size_t k = 0; k < dets[static_cast<size_t>(f)].detections.size(); ++k) {
            CHECK(prov[static_cast<size_t>(f)][k] != 1);
            CHECK(dets[static_cast<size_t>(f)].detections[k].s_occ > 0.0);
        }
    }
    // ghosts carry negative occlusion scores when enabled
    cfg.emit_ghosts = true;
    dets = oracle_detect(seq, cfg, &prov);
    bool saw_ghost = false;
    for (int f = 5; f < 15; ++f)
        for (const Detection& d : dets[static_cast<size_t>(f)].detections)
            if (d.s_occ < 0.0) {
                saw_ghost = true;
                CHECK(d.s_mask < 0.5);
            }
    CHECK(saw_ghost);

    // binomial expectation: miss rate 0.5 over 1000 object-frames
    SceneConfig mc = small_scene();
    mc.n_objects = 5;
    mc.object_size = 0.12;
    mc.n_frames = 200;
    mc.miss_rate = 0.5;
    const SimSequence mseq = generate_sequence(mc);
    const auto mdets = oracle_detect(mseq, mc);
    int count = 0;
    for (const FrameDetections& fd : mdets) count += static_cast<int>(fd.detections.size());
    CHECK(count > 450);
    CHECK(count < 550);
}

TEST_CASE("oracle output round-trips through the detection wire format") {
    const SceneConfig cfg = small_scene();
    const SimSequence seq = generate_sequence(cfg);
    const auto dets = oracle_detect(seq, cfg);
    const std::string text = detections_to_string(cfg.mask_height, cfg.mask_width, dets);
    WireHeader h;
    const auto parsed = detections_from_string(text, &h);
    CHECK(h.mask_h == cfg.mask_height);
    const std::string again = detections_to_string(h.mask_h, h.mask_w, parsed);
    CHECK(text == again);
}
