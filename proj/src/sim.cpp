#include "moetrack/sim.hpp"

#include <algorithm>
#include <cmath>

namespace moetrack {

namespace {

constexpr uint64_t kStreamPlacement = 1;
constexpr uint64_t kStreamScores = 2;
constexpr uint64_t kStreamMisses = 3;
constexpr uint64_t kStreamNoise = 4;
constexpr uint64_t kStreamFeatures = 5;

} // namespace

void validate_scene(const SceneConfig& cfg) {
    MTK_CONFIG_REQUIRE(cfg.n_objects >= 0, "sim.objects must be >= 0");
    MTK_CONFIG_REQUIRE(cfg.n_frames >= 1, "sim.frames must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.height >= 4 && cfg.width >= 4, "sim.height/width must be >= 4");
    MTK_CONFIG_REQUIRE(cfg.mask_height >= 1 && cfg.mask_width >= 1,
                       "sim.mask grid must be positive");
    MTK_CONFIG_REQUIRE(cfg.miss_rate >= 0.0 && cfg.miss_rate < 1.0,
                       "sim.miss_rate must be in [0, 1)");
    MTK_CONFIG_REQUIRE(cfg.sigma_pos >= 0.0, "sim.sigma_pos must be >= 0");
    MTK_CONFIG_REQUIRE(cfg.object_size > 0.0 && cfg.object_size <= 1.0,
                       "sim.object_size must be in (0, 1]");
    MTK_CONFIG_REQUIRE(cfg.appearance_dim >= 2, "sim.appearance_dim must be >= 2");
    MTK_CONFIG_REQUIRE(cfg.appearance_margin >= 0.0, "sim.appearance_margin must be >= 0");
    MTK_CONFIG_REQUIRE(cfg.feature_noise >= 0.0, "sim.feature_noise must be >= 0");
    for (const OcclusionWindow& w : cfg.occlusions) {
        MTK_CONFIG_REQUIRE(w.object >= 0 && w.object < cfg.n_objects,
                           "sim.occlusions: object index out of range");
        MTK_CONFIG_REQUIRE(w.start >= 0 && w.length >= 0 && w.start + w.length <= cfg.n_frames,
                           "sim.occlusions: window outside [0, frames)");
    }
    if (!cfg.allow_overlap && cfg.n_objects > 0) {
        // objects live on horizontal lanes; each lane must fit one object
        const double lane = 1.0 / cfg.n_objects;
        MTK_CONFIG_REQUIRE(cfg.object_size < lane,
                           "sim: infeasible disjointness at requested density "
                           "(object_size too large for object count)");
    }
}

SimSequence generate_sequence(const SceneConfig& cfg) {
    validate_scene(cfg);
    Rng place = Rng::stream(cfg.seed, kStreamPlacement);
    Rng feat = Rng::stream(cfg.seed, kStreamFeatures);

    SimSequence seq;
    const int n = cfg.n_objects;
    const double size = cfg.object_size;

    // appearance vectors: RGB scalar shared within pairs, TDE scalar distinct
    const int n_pairs = (n + 1) / 2;
    for (int i = 0; i < n; ++i) {
        const int pair = i / 2;
        const double r =
            n_pairs <= 1 ? 0.65 : 0.3 + 0.7 * static_cast<double>(pair) / (n_pairs - 1);
        const double t = n <= 1 ? 0.65 : 0.3 + 0.7 * static_cast<double>(i) / (n - 1);
        seq.value_r.push_back(r);
        seq.value_tde.push_back(t);
        Vec a(static_cast<size_t>(cfg.appearance_dim), 0.0);
        a[0] = r;
        a[1] = t;
        a[static_cast<size_t>(2 + i % (cfg.appearance_dim - 2))] += 1.0;
        for (double& v : a) v += feat.normal(0.0, 0.01);
        seq.appearance.push_back(l2_normalize(a));
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d2 = 0.0;
            for (size_t k = 0; k < seq.appearance[static_cast<size_t>(i)].size(); ++k) {
                const double d = seq.appearance[static_cast<size_t>(i)][k] -
                                 seq.appearance[static_cast<size_t>(j)][k];
                d2 += d * d;
            }
            MTK_CONFIG_REQUIRE(std::sqrt(d2) >= cfg.appearance_margin,
                               "sim: appearance separation below requested margin; raise "
                               "sim.appearance_dim or lower sim.appearance_margin");
        }

    // one horizontal lane per object keeps masks disjoint for every frame
    std::vector<double> cy(static_cast<size_t>(n)), x0(static_cast<size_t>(n)),
        vx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double lane = n > 0 ? 1.0 / n : 1.0;
        cy[static_cast<size_t>(i)] = (i + 0.5) * lane;
        const double lo = size / 2 + 0.01;
        const double hi = 1.0 - size / 2 - 0.01;
        const double start = place.uniform(lo, hi);
        double end = place.uniform(lo, hi);
        x0[static_cast<size_t>(i)] = start;
        if (cfg.motion == MotionModel::Linear) {
            vx[static_cast<size_t>(i)] = cfg.n_frames > 1 ? (end - start) / (cfg.n_frames - 1)
                                                          : 0.0;
        } else {
            vx[static_cast<size_t>(i)] = place.uniform(-0.02, 0.02);
        }
    }

    auto occluded = [&](int object, int frame) {
        for (const OcclusionWindow& w : cfg.occlusions)
            if (w.object == object && frame >= w.start && frame < w.start + w.length) return true;
        return false;
    };

    for (int f = 0; f < cfg.n_frames; ++f) {
        GtFrame gtf;
        gtf.frame = f;
        Mat fr(cfg.height, cfg.width);
        Mat ft(cfg.height, cfg.width);
        for (int i = 0; i < n; ++i) {
            double cx;
            if (cfg.motion == MotionModel::Linear) {
                cx = x0[static_cast<size_t>(i)] + vx[static_cast<size_t>(i)] * f;
            } else {
                // reflect inside [size/2, 1 - size/2]
                const double lo = size / 2;
                const double span = 1.0 - size;
                double pos = x0[static_cast<size_t>(i)] - lo +
                             vx[static_cast<size_t>(i)] * f;
                pos = std::fmod(pos, 2.0 * span);
                if (pos < 0) pos += 2.0 * span;
                cx = lo + (pos <= span ? pos : 2.0 * span - pos);
            }
            GtObject o;
            o.id = i;
            o.box = Box{cx, cy[static_cast<size_t>(i)], size, size};
            o.mask = rasterize_box(o.box, cfg.mask_height, cfg.mask_width);
            o.visible = !occluded(i, f);
            if (o.visible) {
                // render into both modality fields
                const int px0 = std::clamp(static_cast<int>(std::round(o.box.x0() * cfg.width)),
                                           0, cfg.width);
                const int px1 = std::clamp(static_cast<int>(std::round(o.box.x1() * cfg.width)),
                                           0, cfg.width);
                const int py0 = std::clamp(static_cast<int>(std::round(o.box.y0() * cfg.height)),
                                           0, cfg.height);
                const int py1 = std::clamp(static_cast<int>(std::round(o.box.y1() * cfg.height)),
                                           0, cfg.height);
                for (int y = py0; y < py1; ++y)
                    for (int x = px0; x < px1; ++x) {
                        fr.at(y, x) = seq.value_r[static_cast<size_t>(i)];
                        ft.at(y, x) = seq.value_tde[static_cast<size_t>(i)];
                    }
            }
            gtf.objects.push_back(std::move(o));
        }
        if (!cfg.allow_overlap) {
            // lane construction keeps masks disjoint; verify anyway
            BinMask acc(cfg.mask_height, cfg.mask_width);
            for (const GtObject& o : gtf.objects) {
                if (!o.visible) continue;
                for (size_t k = 0; k < o.mask.data.size(); ++k) {
                    MTK_CONFIG_REQUIRE(!(acc.data[k] && o.mask.data[k]),
                                       "sim: overlapping masks generated");
                    acc.data[k] = static_cast<uint8_t>(acc.data[k] | o.mask.data[k]);
                }
            }
        }
        seq.frames_r.push_back(std::move(fr));
        if (cfg.modality != ModalityPair::RgbOnly) seq.frames_tde.push_back(std::move(ft));
        seq.gt.push_back(std::move(gtf));
    }
    return seq;
}

std::vector<FrameDetections> oracle_detect(const SimSequence& seq, const SceneConfig& cfg,
                                           std::vector<std::vector<int>>* provenance) {
    Rng scores = Rng::stream(cfg.seed, kStreamScores);
    Rng misses = Rng::stream(cfg.seed, kStreamMisses);
    Rng noise = Rng::stream(cfg.seed, kStreamNoise);
    Rng featn = Rng::stream(cfg.seed, kStreamFeatures ^ 0xffULL);

    std::vector<FrameDetections> out;
    if (provenance) provenance->clear();
    for (const GtFrame& gtf : seq.gt) {
        FrameDetections fd;
        fd.frame = gtf.frame;
        std::vector<int> prov;
        for (size_t i = 0; i < gtf.objects.size(); ++i) {
            const GtObject& o = gtf.objects[i];
            // streams advance identically for every object-frame
            const double miss_draw = misses.uniform01();
            const double dx = noise.normal(0.0, cfg.sigma_pos);
            const double dy = noise.normal(0.0, cfg.sigma_pos);
            const double score = scores.uniform(0.8, 1.0);
            const double ghost_score = scores.uniform(0.1, 0.4);
            if (!o.visible) {
                if (cfg.emit_ghosts) {
                    Detection d;
                    d.box = o.box;
                    d.mask = rasterize_box(d.box, cfg.mask_height, cfg.mask_width);
                    d.s_mask = ghost_score;
                    d.s_occ = -1.0;
                    fd.detections.push_back(std::move(d));
                    prov.push_back(-1);
                }
                continue;
            }
            if (miss_draw < cfg.miss_rate) continue;
            Detection d;
            d.box = o.box;
            d.box.cx = std::clamp(d.box.cx + dx, d.box.w / 2, 1.0 - d.box.w / 2);
            d.box.cy = std::clamp(d.box.cy + dy, d.box.h / 2, 1.0 - d.box.h / 2);
            d.mask = rasterize_box(d.box, cfg.mask_height, cfg.mask_width);
            d.s_mask = score;
            d.s_occ = 1.0;
            Vec f = seq.appearance[i];
            if (cfg.feature_noise > 0.0)
                for (double& v : f) v += featn.normal(0.0, cfg.feature_noise);
            d.feature = std::move(f);
            fd.detections.push_back(std::move(d));
            prov.push_back(static_cast<int>(i));
        }
        if (provenance) provenance->push_back(std::move(prov));
        out.push_back(std::move(fd));
    }
    return out;
}

} // namespace moetrack
