#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moetrack/assoc.hpp"
#include "moetrack/pipeline.hpp"
#include "moetrack/roi.hpp"
#include "moetrack/rng.hpp"

using namespace moetrack;

namespace {

double brute_force_best(const Mat& a) {
    const int n = a.rows;
    const int m = a.cols;
    double best = -1e300;
    if (n <= m) {
        std::vector<int> cols(static_cast<size_t>(m));
        std::iota(cols.begin(), cols.end(), 0);
        std::sort(cols.begin(), cols.end());
        do {
            double total = 0.0;
            for (int i = 0; i < n; ++i) total += a.at(i, cols[static_cast<size_t>(i)]);
            best = std::max(best, total);
        } while (std::next_permutation(cols.begin(), cols.end()));
    } else {
        std::vector<int> rows(static_cast<size_t>(n));
        std::iota(rows.begin(), rows.end(), 0);
        do {
            double total = 0.0;
            for (int j = 0; j < m; ++j) total += a.at(rows[static_cast<size_t>(j)], j);
            best = std::max(best, total);
        } while (std::next_permutation(rows.begin(), rows.end()));
    }
    return best;
}

Vec unit(std::initializer_list<double> v) { return l2_normalize(Vec(v)); }

CandidateUpdate cand(double cx, const Vec& f) {
    CandidateUpdate c;
    c.f = f;
    c.box = Box{cx, 0.5, 0.1, 0.1};
    c.s_mask = 0.9;
    c.s_occ = 1.0;
    return c;
}

} // namespace

TEST_CASE("hungarian equals brute force on random rectangular matrices") {
    Rng rng(404);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(6));
        const int m = 1 + static_cast<int>(rng.uniform_int(6));
        Mat a(n, m);
        for (double& v : a.d) v = rng.uniform(-1.0, 1.0);
        const Assignment got = assign_max(a);
        CHECK(static_cast<int>(got.pairs.size()) == std::min(n, m));
        CHECK(got.total == doctest::Approx(brute_force_best(a)).epsilon(1e-12));
    }
}

TEST_CASE("match with threshold gate") {
    Mat a(2, 2);
    a.at(0, 0) = 1.0;
    a.at(1, 1) = 1.0;
    auto pairs = match(a, 0.75).pairs;
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == std::pair<int, int>{0, 0});
    CHECK(pairs[1] == std::pair<int, int>{1, 1});

    Mat low(3, 3, 0.5);
    CHECK(match(low, 0.75).pairs.empty());

    // exceeding is strict: exactly tau is dropped
    Mat edge(1, 1, 0.75);
    CHECK(match(edge, 0.75).pairs.empty());

    // threshold monotonicity
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        Mat m(4, 5);
        for (double& v : m.d) v = rng.uniform(-0.5, 1.0);
        size_t prev = match(m, -1.0).pairs.size();
        for (double tau : {0.0, 0.25, 0.5, 0.75, 0.9}) {
            const size_t cur = match(m, tau).pairs.size();
            CHECK(cur <= prev);
            prev = cur;
        }
    }
}

TEST_CASE("roi_align") {
    // constant feature map -> constant output
    Mat fmap(4, 3, 2.5);
    Box unit_box{0.5, 0.5, 1.0, 1.0};
    Mat out = roi_align(fmap, 2, 2, unit_box, 3);
    for (double v : out.d) CHECK(v == doctest::Approx(2.5));

    // box covering exactly one cell -> replicated value: a 1x1 map, and the
    // center cell of a 3x3 map sampled exactly on its pixel center
    Mat single(1, 1, 7.0);
    out = roi_align(single, 1, 1, Box{0.6, 0.4, 0.5, 0.7}, 3);
    for (double v : out.d) CHECK(v == doctest::Approx(7.0));
    Mat nine(9, 1);
    nine.at(4, 0) = 7.0;
    const double third = 1.0 / 3.0;
    out = roi_align(nine, 3, 3, Box{0.5, 0.5, third, third}, 1);
    CHECK(out.at(0, 0) == doctest::Approx(7.0));

    // bilinear center sample oracle: [[0,1],[2,3]] at (0.5, 0.5) -> 1.5
    Mat grid(4, 1);
    grid.at(0, 0) = 0.0;
    grid.at(1, 0) = 1.0;
    grid.at(2, 0) = 2.0;
    grid.at(3, 0) = 3.0;
    out = roi_align(grid, 2, 2, unit_box, 1);
    CHECK(out.at(0, 0) == doctest::Approx(1.5));

    CHECK_THROWS_AS(roi_align(grid, 2, 2, Box{0.5, 0.5, 0.0, 0.5}, 1), contract_error);
}

TEST_CASE("rle round trip and canonical form") {
    BinMask m(3, 4);
    m.set(0, 1, 1);
    m.set(0, 2, 1);
    m.set(2, 3, 1);
    const auto runs = rle_encode(m);
    CHECK(runs == std::vector<int64_t>{1, 2, 8, 1});
    const BinMask back = rle_decode(runs, 3, 4);
    CHECK(back.data == m.data);

    // mask starting with a set pixel gets a leading zero run
    BinMask lead(1, 3);
    lead.set(0, 0, 1);
    CHECK(rle_encode(lead) == std::vector<int64_t>{0, 1, 2});

    // all-zero mask is a single run
    CHECK(rle_encode(BinMask(2, 2)) == std::vector<int64_t>{4});

    CHECK_THROWS_AS(rle_decode({1, 2}, 3, 4), contract_error);   // does not cover
    CHECK_THROWS_AS(rle_decode({20}, 3, 4), contract_error);     // exceeds
    CHECK_THROWS_AS(rle_decode({1, 0, 11}, 3, 4), contract_error);  // interior zero

    Rng rng(88);
    for (int trial = 0; trial < 200; ++trial) {
        const int h = 1 + static_cast<int>(rng.uniform_int(6));
        const int w = 1 + static_cast<int>(rng.uniform_int(6));
        BinMask r(h, w);
        for (auto& v : r.data) v = rng.uniform01() < 0.4 ? 1 : 0;
        const auto enc = rle_encode(r);
        const BinMask dec = rle_decode(enc, h, w);
        CHECK(dec.data == r.data);
        CHECK(rle_encode(dec) == enc);
    }
}

TEST_CASE("mask_tight_box") {
    BinMask m(4, 4);
    m.set(1, 1, 1);
    m.set(2, 2, 1);
    const Box b = mask_tight_box(m);
    CHECK(b.x0() == doctest::Approx(0.25));
    CHECK(b.x1() == doctest::Approx(0.75));
    CHECK(b.y0() == doctest::Approx(0.25));
    CHECK(b.y1() == doctest::Approx(0.75));
    CHECK_THROWS_AS(mask_tight_box(BinMask(4, 4)), contract_error);
}

TEST_CASE("fine_grained_embedding") {
    Rng rng(3);
    // zero weights everywhere -> zero embedding
    TrackerParams z = init_tracker(3, 2, 2, 2, 2, rng);
    z.conv1_w = Mat(9, 2);
    z.conv1_b = Mat(1, 2);
    z.conv2_w = Mat(18, 2);
    z.conv2_b = Mat(1, 2);
    z.fc_w = Mat(2, 2);
    z.fc_b = Mat(1, 2);
    Mat roi(9, 2, 0.7);
    Mat mask(9, 1, 1.0);
    Mat ae = fine_grained_embedding(z, roi, mask);
    for (double v : ae.d) CHECK(v == 0.0);

    // all-zero mask with identity-like second conv reduces to pooled roi
    TrackerParams idp = init_tracker(3, 2, 2, 2, 2, rng);
    idp.conv1_w = Mat(9, 2);
    idp.conv1_b = Mat(1, 2);
    idp.conv2_w = Mat(18, 2);
    idp.conv2_b = Mat(1, 2);
    // center tap (offset index 4) passes each channel through
    idp.conv2_w.at(4 * 2 + 0, 0) = 1.0;
    idp.conv2_w.at(4 * 2 + 1, 1) = 1.0;
    idp.fc_w = Mat::identity(2);
    idp.fc_b = Mat(1, 2);
    Mat roi2(9, 2);
    Rng rr(5);
    for (double& v : roi2.d) v = rr.uniform(-1, 1);
    ae = fine_grained_embedding(idp, roi2, Mat(9, 1));
    for (int c = 0; c < 2; ++c) {
        double mean = 0.0;
        for (int r = 0; r < 9; ++r) mean += roi2.at(r, c);
        mean *= 1.0 / 9;
        CHECK(ae.at(0, c) == doctest::Approx(mean));
    }

    // G=1, C=1 hand oracle
    TrackerParams h = init_tracker(1, 1, 1, 2, 2, rng);
    h.conv1_w = Mat(9, 1);
    h.conv1_w.at(4, 0) = 0.5;  // center tap
    h.conv1_b = Mat(1, 1, 0.1);
    h.conv2_w = Mat(9, 1);
    h.conv2_w.at(4, 0) = -2.0;
    h.conv2_b = Mat(1, 1, 0.25);
    h.fc_w = Mat(1, 1, 3.0);
    h.fc_b = Mat(1, 1, -1.0);
    Mat a1(1, 1, 0.8);
    Mat m1(1, 1, 1.0);
    const double lifted = 1.0 * 0.5 + 0.1;
    const double mixed = (lifted + 0.8) * -2.0 + 0.25;
    const double expect = mixed * 3.0 - 1.0;
    ae = fine_grained_embedding(h, a1, m1);
    CHECK(ae.at(0, 0) == doctest::Approx(expect));
}

TEST_CASE("position embedding") {
    Rng rng(4);
    TrackerParams z = init_tracker(3, 2, 2, 2, 2, rng);
    z.pos_w1 = Mat(4, 2);
    z.pos_b1 = Mat(1, 2);
    z.pos_w2 = Mat(2, 2);
    z.pos_b2 = Mat(1, 2);
    Mat p = position_embedding(z, Box{0.5, 0.5, 0.2, 0.2});
    for (double v : p.d) CHECK(v == 0.0);

    // determinism
    TrackerParams t = init_tracker(3, 2, 2, 2, 2, rng);
    const Box b{0.3, 0.7, 0.1, 0.2};
    CHECK(position_embedding(t, b).d == position_embedding(t, b).d);

    // hand-set 4 -> 2 -> 2 MLP oracle at (0.5, 0.5, 0.1, 0.1)
    TrackerParams h = init_tracker(3, 2, 2, 2, 2, rng);
    h.pos_w1 = Mat(4, 2);
    h.pos_w1.at(0, 0) = 1.0;
    h.pos_w1.at(1, 1) = -1.0;
    h.pos_w1.at(2, 0) = 2.0;
    h.pos_w1.at(3, 1) = 4.0;
    h.pos_b1 = Mat(1, 2);
    h.pos_b1.at(0, 0) = 0.1;
    h.pos_w2 = Mat(2, 2);
    h.pos_w2.at(0, 0) = 1.0;
    h.pos_w2.at(0, 1) = 0.5;
    h.pos_w2.at(1, 1) = 2.0;
    h.pos_b2 = Mat(1, 2, -0.2);
    const double h0 = gelu_scalar(0.5 * 1.0 + 0.1 * 2.0 + 0.1);
    const double h1 = gelu_scalar(0.5 * -1.0 + 0.1 * 4.0);
    p = position_embedding(h, Box{0.5, 0.5, 0.1, 0.1});
    CHECK(p.at(0, 0) == doctest::Approx(h0 * 1.0 - 0.2));
    CHECK(p.at(0, 1) == doctest::Approx(h0 * 0.5 + h1 * 2.0 - 0.2));
}

TEST_CASE("mem_forward") {
    Rng rng(6);
    // zero-weight attentions with residuals: q = qo
    TrackerParams z = init_tracker(3, 2, 2, 4, 3, rng);
    z.self_wq = Mat(4, 4);
    z.self_wk = Mat(4, 4);
    z.self_wv = Mat(4, 4);
    z.self_wo = Mat(4, 4);
    z.cross_wq = Mat(4, 4);
    z.cross_wk = Mat(4, 4);
    z.cross_wv = Mat(4, 4);
    z.cross_wo = Mat(4, 4);
    Mat ap(1, 4, 0.5);
    MemOut out = z.qo.rows >= 0 ? mem_forward(z, {ap}, {}) : MemOut{};
    REQUIRE(out.q.size() == 1);
    CHECK(max_abs_diff(out.q[0], z.qo) == 0.0);

    // permutation symmetry: identical ap -> identical learned q
    TrackerParams t = init_tracker(3, 2, 2, 4, 3, rng);
    out = mem_forward(t, {ap, ap, ap}, {});
    REQUIRE(out.q.size() == 3);
    CHECK(max_abs_diff(out.q[0], out.q[1]) == 0.0);
    CHECK(max_abs_diff(out.q[0], out.q[2]) == 0.0);

    // single-step history: qe equals the single q exactly
    Mat q1(3, 4);
    Rng qr(9);
    for (double& v : q1.d) v = qr.uniform(-1, 1);
    out = mem_forward(t, {}, {{q1}});
    REQUIRE(out.qe.size() == 1);
    REQUIRE(out.qe[0].rows == 1);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) CHECK(out.qe[0].at(0, r * 4 + c) == q1.at(r, c));

    // empty candidate set is valid
    out = mem_forward(t, {}, {});
    CHECK(out.q.empty());
    CHECK(out.qe.empty());
}

TEST_CASE("comprehensive_feature") {
    Mat ae(1, 2);
    ae.at(0, 0) = 3.0;
    Mat q(1, 2);
    q.at(0, 1) = 4.0;
    const Vec f = comprehensive_feature(ae, q);
    REQUIRE(f.size() == 4);
    CHECK(f[0] == doctest::Approx(0.6));
    CHECK(f[1] == doctest::Approx(0.0));
    CHECK(f[2] == doctest::Approx(0.0));
    CHECK(f[3] == doctest::Approx(0.8));
    CHECK(norm2(f) == doctest::Approx(1.0));
    CHECK_THROWS_AS(comprehensive_feature(Mat(1, 2), Mat(1, 2)), contract_error);

    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Mat a(1, 3), b(2, 3);
        for (double& v : a.d) v = rng.normal();
        for (double& v : b.d) v = rng.normal();
        CHECK(norm2(comprehensive_feature(a, b)) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("similarity matrix") {
    // singleton: s1 = 1, A = (1 + s2) / 2; identical vectors give A = 1
    const Vec u = unit({1.0, 2.0, -1.0});
    Mat a = similarity_matrix({u}, {u});
    CHECK(a.at(0, 0) == doctest::Approx(1.0));

    // derived bi-softmax case: dots [2, 0] for one tracklet, two candidates
    const Vec rep{1.0, 0.0};
    const Vec f0{2.0, 0.0};
    const Vec f1{0.0, 1.0};
    a = similarity_matrix({rep}, {f0, f1});
    const double s1 = 0.5 * (std::exp(2.0) / (std::exp(2.0) + 1.0) + 1.0);
    CHECK(std::fabs(s1 - 0.9404) < 1e-4);
    CHECK(a.at(0, 0) == doctest::Approx(0.5 * (s1 + 1.0)));  // cosine(f0, rep) = 1

    // contract: bounds and normalization over random features
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(5));
        const int m = 1 + static_cast<int>(rng.uniform_int(5));
        std::vector<Vec> reps, feats;
        for (int i = 0; i < n; ++i) {
            Vec v(8);
            for (double& x : v) x = rng.normal();
            reps.push_back(l2_normalize(v));
        }
        for (int j = 0; j < m; ++j) {
            Vec v(8);
            for (double& x : v) x = rng.normal();
            feats.push_back(l2_normalize(v));
        }
        a = similarity_matrix(reps, feats);
        for (double v : a.d) {
            CHECK(v > -0.5);
            CHECK(v <= 1.0 + 1e-12);
        }
    }

    CHECK_THROWS_AS(similarity_matrix({Vec{0.0, 0.0}}, {u}), contract_error);
}

TEST_CASE("association losses") {
    Mat a(2, 2, 0.5);
    a.at(0, 0) = 1.0;
    CHECK(loss_sup(a, 0).value == doctest::Approx(0.0));
    a.at(0, 0) = std::exp(-1.0);
    CHECK(loss_sup(a, 0).value == doctest::Approx(1.0));
    a.at(0, 0) = 0.5;
    CHECK(std::fabs(loss_sup(a, 0).value - 0.6931) < 1e-4);
    a.at(0, 0) = -0.1;
    const LossValue clamped = loss_sup(a, 0);
    CHECK(clamped.clamped);
    CHECK(clamped.value == doctest::Approx(-std::log(1e-12)));

    Mat b(2, 2, 1.0);
    CHECK(loss_self(b, {{0, 0}, {1, 1}}).value == doctest::Approx(0.0));
    Mat c(2, 2, 0.5);
    CHECK(std::fabs(loss_self(c, {{0, 0}, {1, 1}}).value - 1.3863) < 1e-4);
    CHECK_THROWS_AS(loss_self(c, {}), contract_error);

    Mat close(2, 2, 1e-13);
    close.at(0, 0) = 1.0 - 1e-13;
    close.at(1, 1) = 1.0 - 1e-13;
    Mat gt(2, 2);
    gt.at(0, 0) = 1.0;
    gt.at(1, 1) = 1.0;
    CHECK(loss_tamot_m(close, gt) <= 1e-10);
    Mat uniform(3, 2, 0.5);
    Mat anybin(3, 2);
    anybin.at(0, 0) = 1.0;
    anybin.at(2, 1) = 1.0;
    CHECK(loss_tamot_m(uniform, anybin) == doctest::Approx(std::log(2.0)));
    Mat single(1, 1, 0.9);
    Mat ones(1, 1, 1.0);
    CHECK(std::fabs(loss_tamot_m(single, ones) - 0.1054) < 1e-4);
    CHECK_THROWS_AS(loss_tamot_m(single, Mat(2, 1, 1.0)), contract_error);
}

TEST_CASE("track store lifecycle") {
    TrackStore store(15, 50);
    const Vec f = unit({1.0, 0.5});

    // frame 0: two spawns, ids 0 and 1 in canonical (left-to-right) order
    auto r0 = store.update(0, {}, {cand(0.2, f), cand(0.6, f)});
    REQUIRE(r0.new_ids.size() == 2);
    CHECK(r0.new_ids[0].first == 0);
    CHECK(r0.new_ids[0].second == 0);
    CHECK(r0.new_ids[1].first == 1);

    // 20 consecutive matches keep only the 15 newest entries
    for (int frame = 1; frame <= 20; ++frame) {
        int idx0 = -1;
        for (int i = 0; i < static_cast<int>(store.active().size()); ++i)
            if (store.active()[static_cast<size_t>(i)].id == 0) idx0 = i;
        store.update(frame, {{idx0, 0}}, {cand(0.2, f)});
    }
    for (const Tracklet& t : store.active())
        if (t.id == 0) {
            CHECK(t.history.size() == 15);
            CHECK(t.history.front().first == 6);  // oldest retained frame
        }

    // id 1 last seen at frame 0: still active at gap 50, gone at 51
    bool found = false;
    store.update(50, {}, {});
    for (const Tracklet& t : store.active()) found = found || t.id == 1;
    CHECK(found);
    auto r51 = store.update(51, {}, {});
    CHECK(std::find(r51.terminated.begin(), r51.terminated.end(), 1) != r51.terminated.end());
    for (const Tracklet& t : store.active()) CHECK(t.id != 1);

    // duplicate assignment is a contract violation
    TrackStore dup(15, 50);
    dup.update(0, {}, {cand(0.3, f)});
    CHECK_THROWS_AS(dup.update(1, {{0, 0}, {0, 0}}, {cand(0.3, f)}), contract_error);

    // id monotonicity across spawns
    TrackStore mono(15, 50);
    int64_t last = -1;
    for (int frame = 0; frame < 5; ++frame) {
        auto r = mono.update(frame, {}, {cand(0.1 + 0.1 * frame, f)});
        for (const auto& [id, ci] : r.new_ids) {
            CHECK(id > last);
            last = id;
        }
    }
}

TEST_CASE("candidate generation") {
    std::vector<Detection> dets;
    for (double s : {0.9, 0.71, 0.69}) {
        Detection d;
        d.box = Box{0.5, 0.5, 0.2, 0.2};
        d.s_mask = s;
        d.s_occ = 1.0;
        dets.push_back(d);
    }
    CHECK(generate_candidates_sot(dets, 0.7).size() == 2);

    // boundary: exactly tau_mask is kept
    std::vector<Detection> edge(1);
    edge[0].box = Box{0.5, 0.5, 0.2, 0.2};
    edge[0].s_mask = 0.7;
    edge[0].s_occ = 1.0;
    CHECK(generate_candidates_sot(edge, 0.7).size() == 1);

    // occlusion gate: s_occ <= 0 excluded
    for (Detection& d : dets) d.s_occ = -1.0;
    CHECK(generate_candidates_sot(dets, 0.7).empty());
    CHECK(generate_candidates_sot({}, 0.7).empty());

    // mot: floor + mask-tight refinement + duplicates kept
    Detection m;
    m.box = Box{0.5, 0.5, 0.9, 0.9};
    m.mask = BinMask(8, 8);
    m.mask.set(2, 2, 1);
    m.mask.set(3, 3, 1);
    m.s_mask = 0.8;
    auto cands = generate_candidates_mot({m, m}, 0.5);
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].box.x0() == doctest::Approx(0.25));
    CHECK(cands[0].box.x1() == doctest::Approx(0.5));
}

TEST_CASE("track_sequence on explicit features") {
    Rng rng(31);
    TrackerParams params = init_tracker(3, 4, 4, 4, 4, rng);
    TrackerConfig cfg;
    cfg.score_floor = 0.5;

    // single object, perfect detections: one id for the whole sequence
    std::vector<FrameDetections> stream;
    const Vec f = unit({1.0, 0.2, -0.3, 0.5});
    for (int t = 0; t < 30; ++t) {
        Detection d;
        d.box = Box{0.1 + 0.02 * t, 0.5, 0.1, 0.1};
        d.s_mask = 0.9;
        d.s_occ = 1.0;
        d.feature = f;
        stream.push_back({t, {d}});
    }
    SequenceResult res = track_sequence(cfg, params, stream);
    for (const TrackRecord& r : res.records) CHECK(r.id == 0);
    CHECK(res.records.size() == 30);

    // two well-separated objects: stable distinct ids
    std::vector<FrameDetections> two;
    const Vec fa = unit({1.0, 0.0, 0.0, 0.0});
    const Vec fb = unit({0.0, 1.0, 0.0, 0.0});
    for (int t = 0; t < 100; ++t) {
        Detection da, db;
        da.box = Box{0.2, 0.3, 0.1, 0.1};
        da.s_mask = 0.9;
        da.s_occ = 1.0;
        da.feature = fa;
        db.box = Box{0.8, 0.7, 0.1, 0.1};
        db.s_mask = 0.9;
        db.s_occ = 1.0;
        db.feature = fb;
        two.push_back({t, {da, db}});
    }
    const SequenceResult res_two = track_sequence(cfg, params, two);
    std::set<int64_t> ids;
    for (const TrackRecord& r : res_two.records) ids.insert(r.id);
    CHECK(ids.size() == 2);

    // occlusion shorter than the retirement gap: the same id resumes
    std::vector<FrameDetections> occ;
    for (int t = 0; t < 80; ++t) {
        FrameDetections fd{t, {}};
        if (t < 20 || t >= 50) {
            Detection d;
            d.box = Box{0.5, 0.5, 0.1, 0.1};
            d.s_mask = 0.9;
            d.s_occ = 1.0;
            d.feature = f;
            fd.detections.push_back(d);
        }
        occ.push_back(std::move(fd));
    }
    res = track_sequence(cfg, params, occ);
    ids.clear();
    for (const TrackRecord& r : res.records) ids.insert(r.id);
    CHECK(ids.size() == 1);

    // permutation equivariance: permuted candidates, identical id decisions
    std::vector<FrameDetections> swapped = two;
    for (FrameDetections& fd : swapped) std::swap(fd.detections[0], fd.detections[1]);
    const SequenceResult res_swapped = track_sequence(cfg, params, swapped);
    auto key = [](const SequenceResult& r) {
        std::vector<std::tuple<int, int64_t, double>> k;
        for (const TrackRecord& rec : r.records) k.emplace_back(rec.frame, rec.id, rec.box.cx);
        std::sort(k.begin(), k.end());
        return k;
    };
    CHECK(key(res_swapped) == key(res_two));
}

TEST_CASE("sot mode keeps the prior target") {
    Rng rng(37);
    TrackerParams params = init_tracker(3, 4, 4, 4, 4, rng);
    TrackerConfig cfg;
    cfg.mode = TrackMode::Sot;

    const Vec target = unit({1.0, 0.0, 0.0, 0.0});
    const Vec distractor = unit({0.0, 1.0, 0.0, 0.0});
    std::vector<FrameDetections> stream;
    for (int t = 0; t < 40; ++t) {
        Detection d0, d1;
        d0.box = Box{0.3, 0.5, 0.1, 0.1};
        d0.s_mask = 0.95;
        d0.s_occ = 1.0;
        d0.feature = target;
        d1.box = Box{0.7, 0.5, 0.1, 0.1};
        d1.s_mask = 0.8;
        d1.s_occ = 1.0;
        d1.feature = distractor;
        stream.push_back({t, {d0, d1}});
    }
    const SequenceResult res = track_sequence(cfg, params, stream);
    REQUIRE(res.sot_target_id >= 0);
    int target_frames = 0;
    for (const TrackRecord& r : res.records)
        if (r.id == res.sot_target_id) {
            CHECK(r.box.cx == doctest::Approx(0.3));
            ++target_frames;
        }
    CHECK(target_frames == 40);
}
