#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "moetrack/metrics.hpp"
#include "moetrack/rng.hpp"

using namespace moetrack;

namespace {

Box at(double cx, double cy = 0.5, double s = 0.1) { return Box{cx, cy, s, s}; }

GtFrame gt_frame(int frame, std::initializer_list<std::pair<int64_t, Box>> objs) {
    GtFrame f;
    f.frame = frame;
    for (const auto& [id, box] : objs) f.objects.push_back({id, box, BinMask(), true});
    return f;
}

TrackRecord rec(int frame, int64_t id, const Box& b) { return {frame, id, b, 1.0}; }

} // namespace

TEST_CASE("iou") {
    const Box a = at(0.5, 0.5, 0.2);
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, at(0.9, 0.9, 0.1)) == doctest::Approx(0.0));
    // unit squares offset by half-width: intersection 1/2, union 3/2
    const Box u1{0.5, 0.5, 1.0, 1.0};
    const Box u2{1.0, 0.5, 1.0, 1.0};
    CHECK(std::fabs(iou(u1, u2) - 1.0 / 3.0) < 1e-9);
}

TEST_CASE("clear_mot") {
    // perfect tracks
    std::vector<GtFrame> gt;
    std::vector<TrackRecord> tracks;
    for (int f = 0; f < 5; ++f) {
        gt.push_back(gt_frame(f, {{0, at(0.2)}, {1, at(0.8)}}));
        tracks.push_back(rec(f, 7, at(0.2)));
        tracks.push_back(rec(f, 9, at(0.8)));
    }
    ClearResult r = clear_mot(gt, tracks);
    REQUIRE(r.mota.has_value());
    CHECK(*r.mota == doctest::Approx(1.0));
    CHECK(r.id_switches == 0);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);

    // one FP among 10 gt detections, otherwise perfect: MOTA 0.9
    std::vector<GtFrame> g1;
    std::vector<TrackRecord> t1;
    for (int f = 0; f < 10; ++f) {
        g1.push_back(gt_frame(f, {{0, at(0.3)}}));
        t1.push_back(rec(f, 0, at(0.3)));
    }
    t1.push_back(rec(4, 5, at(0.9)));
    r = clear_mot(g1, t1);
    CHECK(*r.mota == doctest::Approx(0.9));
    CHECK(r.fp == 1);

    // both track ids flip once mid-sequence: 2 switches
    std::vector<GtFrame> g2;
    std::vector<TrackRecord> t2;
    for (int f = 0; f < 10; ++f) {
        g2.push_back(gt_frame(f, {{0, at(0.2)}, {1, at(0.8)}}));
        const int64_t ida = f < 5 ? 100 : 200;
        const int64_t idb = f < 5 ? 200 : 100;
        t2.push_back(rec(f, ida, at(0.2)));
        t2.push_back(rec(f, idb, at(0.8)));
    }
    r = clear_mot(g2, t2);
    CHECK(r.id_switches == 2);

    // empty ground truth: MOTA absent
    CHECK_FALSE(clear_mot({}, t2).mota.has_value());
}

TEST_CASE("idf1") {
    std::vector<GtFrame> gt;
    std::vector<TrackRecord> tracks;
    for (int f = 0; f < 10; ++f) {
        gt.push_back(gt_frame(f, {{0, at(0.2)}, {1, at(0.8)}}));
        tracks.push_back(rec(f, 3, at(0.2)));
        tracks.push_back(rec(f, 4, at(0.8)));
    }
    CHECK(idf1(gt, tracks) == doctest::Approx(1.0));
    CHECK(idf1(gt, {}) == doctest::Approx(0.0));

    // ids swapped for exactly half the frames
    std::vector<TrackRecord> swapped;
    for (int f = 0; f < 10; ++f) {
        const int64_t ida = f < 5 ? 3 : 4;
        const int64_t idb = f < 5 ? 4 : 3;
        swapped.push_back(rec(f, ida, at(0.2)));
        swapped.push_back(rec(f, idb, at(0.8)));
    }
    CHECK(idf1(gt, swapped) == doctest::Approx(0.5));
}

TEST_CASE("average_overlap") {
    std::vector<GtFrame> gt;
    std::vector<TrackRecord> perfect;
    for (int f = 0; f < 6; ++f) {
        gt.push_back(gt_frame(f, {{0, at(0.5, 0.5, 0.2)}}));
        perfect.push_back(rec(f, 0, at(0.5, 0.5, 0.2)));
    }
    CHECK(average_overlap(gt, perfect) == doctest::Approx(1.0));
    CHECK(average_overlap(gt, {}) == doctest::Approx(0.0));

    // alternating IoU 1.0 / 0.5 over an even frame count -> 0.75
    std::vector<TrackRecord> alt;
    for (int f = 0; f < 6; ++f) {
        Box b = at(0.5, 0.5, 0.2);
        if (f % 2 == 1) {
            // shift for IoU exactly 0.5: offset by s/3 gives (2/3)/(4/3) = 0.5
            b.cx += 0.2 / 3.0;
        }
        alt.push_back(rec(f, 0, b));
    }
    CHECK(average_overlap(gt, alt) == doctest::Approx(0.75));
}

TEST_CASE("metric invariance under consistent relabeling") {
    Rng rng(12);
    std::vector<GtFrame> gt;
    std::vector<TrackRecord> tracks;
    for (int f = 0; f < 30; ++f) {
        GtFrame g;
        g.frame = f;
        for (int64_t i = 0; i < 3; ++i) {
            const Box b = at(0.2 + 0.3 * static_cast<double>(i), 0.5, 0.1);
            g.objects.push_back({i, b, BinMask(), true});
            if (rng.uniform01() > 0.1) {
                Box noisy = b;
                noisy.cx += rng.uniform(-0.01, 0.01);
                tracks.push_back(rec(f, 10 + i, noisy));
            }
        }
        gt.push_back(std::move(g));
    }
    std::vector<TrackRecord> relabeled = tracks;
    for (TrackRecord& r : relabeled) r.id = r.id * 31 + 5;
    const MetricReport a = evaluate(gt, tracks);
    const MetricReport b = evaluate(gt, relabeled);
    CHECK(a.idf1 == doctest::Approx(b.idf1));
    REQUIRE(a.mota.has_value());
    CHECK(*a.mota == doctest::Approx(*b.mota));
    CHECK(a.id_switches == b.id_switches);
    CHECK(a.id_switches == 0);  // bijective relabeling never switches

    // determinism
    const MetricReport c = evaluate(gt, tracks);
    CHECK(report_to_json(a) == report_to_json(c));
}

TEST_CASE("report serialization") {
    MetricReport r;
    r.mota = 0.875;
    r.idf1 = 1.0;
    r.id_switches = 2;
    r.fp = 3;
    r.fn = 4;
    const std::string j = report_to_json(r);
    CHECK(j.find("\"mota\":0.875") != std::string::npos);
    CHECK(j.find("\"ao\":null") != std::string::npos);
    const std::string c = report_to_csv(r);
    CHECK(c.find("mota,idf1,id_switches,fp,fn,ao") == 0);
}
