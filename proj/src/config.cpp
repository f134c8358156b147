#include "moetrack/config.hpp"

#include <json.hpp>

#include "moetrack/wire.hpp"

namespace moetrack {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::vector<std::string>& known,
                const std::string& section) {
    MTK_CONFIG_REQUIRE(obj.is_object(), "config section '" + section + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const std::string& k : known) ok = ok || k == key;
        MTK_CONFIG_REQUIRE(ok, "config: unknown key '" + section + "." + key + "'");
    }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out, const std::string& section) {
    if (!obj.contains(key)) return;
    try {
        obj.at(key).get_to(out);
    } catch (const json::exception&) {
        throw config_error("config: bad value for key '" + section + "." + std::string(key) + "'");
    }
}

} // namespace

RunConfig config_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: parse error: ") + e.what());
    }
    check_keys(root, {"seed", "out_dir", "encoder", "tracker", "sim", "train"}, "<root>");

    RunConfig cfg;
    get_to(root, "seed", cfg.seed, "<root>");
    get_to(root, "out_dir", cfg.out_dir, "<root>");

    if (root.contains("encoder")) {
        const json& e = root["encoder"];
        check_keys(e,
                   {"width", "depth", "patch", "heads", "common_experts", "specific_experts",
                    "k_active", "mu", "lambda", "mask_ratio", "precision"},
                   "encoder");
        get_to(e, "width", cfg.encoder.width, "encoder");
        get_to(e, "depth", cfg.encoder.depth, "encoder");
        get_to(e, "patch", cfg.encoder.patch, "encoder");
        get_to(e, "heads", cfg.encoder.heads, "encoder");
        get_to(e, "common_experts", cfg.encoder.common_experts, "encoder");
        get_to(e, "specific_experts", cfg.encoder.specific_experts, "encoder");
        get_to(e, "k_active", cfg.encoder.k_active, "encoder");
        get_to(e, "mu", cfg.encoder.mu, "encoder");
        get_to(e, "lambda", cfg.encoder.lambda, "encoder");
        get_to(e, "mask_ratio", cfg.encoder.mask_ratio, "encoder");
        if (e.contains("precision")) {
            const std::string p = e["precision"].get<std::string>();
            if (p == "f32")
                cfg.encoder.precision = Precision::F32;
            else if (p == "f64")
                cfg.encoder.precision = Precision::F64;
            else
                throw config_error("config: encoder.precision must be 'f32' or 'f64'");
        }
    }

    if (root.contains("tracker")) {
        const json& t = root["tracker"];
        check_keys(t,
                   {"tau_mask", "tau_th", "history", "max_gap", "roi_size", "embed_dim",
                    "query_dim", "query_tokens", "score_floor", "aug_translate",
                    "aug_score_jitter", "aug_feature_noise"},
                   "tracker");
        get_to(t, "tau_mask", cfg.tracker.tau_mask, "tracker");
        get_to(t, "tau_th", cfg.tracker.tau_th, "tracker");
        get_to(t, "history", cfg.tracker.history, "tracker");
        get_to(t, "max_gap", cfg.tracker.max_gap, "tracker");
        get_to(t, "roi_size", cfg.tracker.roi_size, "tracker");
        get_to(t, "embed_dim", cfg.tracker.embed_dim, "tracker");
        get_to(t, "query_dim", cfg.tracker.query_dim, "tracker");
        get_to(t, "query_tokens", cfg.tracker.query_tokens, "tracker");
        get_to(t, "score_floor", cfg.tracker.score_floor, "tracker");
        get_to(t, "aug_translate", cfg.tracker.aug_translate, "tracker");
        get_to(t, "aug_score_jitter", cfg.tracker.aug_score_jitter, "tracker");
        get_to(t, "aug_feature_noise", cfg.tracker.aug_feature_noise, "tracker");
    }

    if (root.contains("sim")) {
        const json& s = root["sim"];
        check_keys(s,
                   {"objects", "frames", "height", "width", "mask_height", "mask_width",
                    "motion", "sigma_pos", "miss_rate", "occlusions", "appearance_margin",
                    "appearance_dim", "modality", "emit_ghosts", "feature_noise", "object_size",
                    "allow_overlap"},
                   "sim");
        get_to(s, "objects", cfg.sim.n_objects, "sim");
        get_to(s, "frames", cfg.sim.n_frames, "sim");
        get_to(s, "height", cfg.sim.height, "sim");
        get_to(s, "width", cfg.sim.width, "sim");
        cfg.sim.mask_height = cfg.sim.height;
        cfg.sim.mask_width = cfg.sim.width;
        get_to(s, "mask_height", cfg.sim.mask_height, "sim");
        get_to(s, "mask_width", cfg.sim.mask_width, "sim");
        if (s.contains("motion")) {
            const std::string m = s["motion"].get<std::string>();
            if (m == "linear")
                cfg.sim.motion = MotionModel::Linear;
            else if (m == "bounce")
                cfg.sim.motion = MotionModel::Bounce;
            else
                throw config_error("config: sim.motion must be 'linear' or 'bounce'");
        }
        get_to(s, "sigma_pos", cfg.sim.sigma_pos, "sim");
        get_to(s, "miss_rate", cfg.sim.miss_rate, "sim");
        if (s.contains("occlusions")) {
            cfg.sim.occlusions.clear();
            for (const json& w : s["occlusions"]) {
                check_keys(w, {"object", "start", "length"}, "sim.occlusions[]");
                OcclusionWindow ow;
                get_to(w, "object", ow.object, "sim.occlusions[]");
                get_to(w, "start", ow.start, "sim.occlusions[]");
                get_to(w, "length", ow.length, "sim.occlusions[]");
                cfg.sim.occlusions.push_back(ow);
            }
        }
        get_to(s, "appearance_margin", cfg.sim.appearance_margin, "sim");
        get_to(s, "appearance_dim", cfg.sim.appearance_dim, "sim");
        if (s.contains("modality")) {
            const std::string m = s["modality"].get<std::string>();
            if (m == "rgb")
                cfg.sim.modality = ModalityPair::RgbOnly;
            else if (m == "rgb-t")
                cfg.sim.modality = ModalityPair::RgbT;
            else if (m == "rgb-d")
                cfg.sim.modality = ModalityPair::RgbD;
            else if (m == "rgb-e")
                cfg.sim.modality = ModalityPair::RgbE;
            else
                throw config_error(
                    "config: sim.modality must be one of 'rgb', 'rgb-t', 'rgb-d', 'rgb-e'");
        }
        get_to(s, "emit_ghosts", cfg.sim.emit_ghosts, "sim");
        get_to(s, "feature_noise", cfg.sim.feature_noise, "sim");
        get_to(s, "object_size", cfg.sim.object_size, "sim");
        get_to(s, "allow_overlap", cfg.sim.allow_overlap, "sim");
    }
    cfg.sim.seed = cfg.seed;

    if (root.contains("train")) {
        const json& t = root["train"];
        check_keys(t, {"step_size", "steps"}, "train");
        get_to(t, "step_size", cfg.train.step_size, "train");
        get_to(t, "steps", cfg.train.steps, "train");
    }

    // range validation with explicit key names
    MTK_CONFIG_REQUIRE(cfg.encoder.width >= 8,
                       "config: encoder.width must be >= 8 (expert latent width is width/8)");
    MTK_CONFIG_REQUIRE(cfg.encoder.depth >= 0, "config: encoder.depth must be >= 0");
    MTK_CONFIG_REQUIRE(cfg.encoder.patch >= 1, "config: encoder.patch must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.encoder.heads >= 1 && cfg.encoder.width % cfg.encoder.heads == 0,
                       "config: encoder.heads must divide encoder.width");
    MTK_CONFIG_REQUIRE(cfg.encoder.common_experts >= 1,
                       "config: encoder.common_experts must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.encoder.specific_experts >= 1,
                       "config: encoder.specific_experts must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.encoder.k_active >= 1 &&
                           cfg.encoder.k_active <= cfg.encoder.common_experts &&
                           cfg.encoder.k_active <= cfg.encoder.specific_experts,
                       "config: encoder.k_active must be in [1, expert count]");
    MTK_CONFIG_REQUIRE(cfg.encoder.mu >= 0.0 && cfg.encoder.lambda >= 0.0,
                       "config: encoder.mu and encoder.lambda must be >= 0");
    MTK_CONFIG_REQUIRE(cfg.encoder.mask_ratio >= 0.0 && cfg.encoder.mask_ratio <= 1.0,
                       "config: encoder.mask_ratio must be in [0, 1]");
    MTK_CONFIG_REQUIRE(cfg.tracker.tau_mask >= 0.0 && cfg.tracker.tau_mask <= 1.0,
                       "config: tracker.tau_mask must be in [0, 1]");
    MTK_CONFIG_REQUIRE(cfg.tracker.history >= 1, "config: tracker.history must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.tracker.max_gap >= 0, "config: tracker.max_gap must be >= 0");
    MTK_CONFIG_REQUIRE(cfg.tracker.roi_size >= 1, "config: tracker.roi_size must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.tracker.embed_dim >= 1, "config: tracker.embed_dim must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.tracker.query_dim >= 1, "config: tracker.query_dim must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.tracker.query_tokens >= 1,
                       "config: tracker.query_tokens must be >= 1");
    MTK_CONFIG_REQUIRE(cfg.train.step_size > 0.0, "config: train.step_size must be > 0");
    MTK_CONFIG_REQUIRE(cfg.train.steps >= 1, "config: train.steps must be >= 1");
    try {
        validate_scene(cfg.sim);
    } catch (const config_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    return config_from_json_text(read_file(path));
}

std::string config_to_json_text(const RunConfig& cfg) {
    json root;
    root["seed"] = cfg.seed;
    root["out_dir"] = cfg.out_dir;
    json e;
    e["width"] = cfg.encoder.width;
    e["depth"] = cfg.encoder.depth;
    e["patch"] = cfg.encoder.patch;
    e["heads"] = cfg.encoder.heads;
    e["common_experts"] = cfg.encoder.common_experts;
    e["specific_experts"] = cfg.encoder.specific_experts;
    e["k_active"] = cfg.encoder.k_active;
    e["mu"] = cfg.encoder.mu;
    e["lambda"] = cfg.encoder.lambda;
    e["mask_ratio"] = cfg.encoder.mask_ratio;
    e["precision"] = cfg.encoder.precision == Precision::F32 ? "f32" : "f64";
    root["encoder"] = e;
    json t;
    t["tau_mask"] = cfg.tracker.tau_mask;
    t["tau_th"] = cfg.tracker.tau_th;
    t["history"] = cfg.tracker.history;
    t["max_gap"] = cfg.tracker.max_gap;
    t["roi_size"] = cfg.tracker.roi_size;
    t["embed_dim"] = cfg.tracker.embed_dim;
    t["query_dim"] = cfg.tracker.query_dim;
    t["query_tokens"] = cfg.tracker.query_tokens;
    t["score_floor"] = cfg.tracker.score_floor;
    t["aug_translate"] = cfg.tracker.aug_translate;
    t["aug_score_jitter"] = cfg.tracker.aug_score_jitter;
    t["aug_feature_noise"] = cfg.tracker.aug_feature_noise;
    root["tracker"] = t;
    json s;
    s["objects"] = cfg.sim.n_objects;
    s["frames"] = cfg.sim.n_frames;
    s["height"] = cfg.sim.height;
    s["width"] = cfg.sim.width;
    s["mask_height"] = cfg.sim.mask_height;
    s["mask_width"] = cfg.sim.mask_width;
    s["motion"] = cfg.sim.motion == MotionModel::Linear ? "linear" : "bounce";
    s["sigma_pos"] = cfg.sim.sigma_pos;
    s["miss_rate"] = cfg.sim.miss_rate;
    json occ = json::array();
    for (const OcclusionWindow& w : cfg.sim.occlusions)
        occ.push_back({{"object", w.object}, {"start", w.start}, {"length", w.length}});
    s["occlusions"] = occ;
    s["appearance_margin"] = cfg.sim.appearance_margin;
    s["appearance_dim"] = cfg.sim.appearance_dim;
    s["modality"] = cfg.sim.modality == ModalityPair::RgbOnly  ? "rgb"
                    : cfg.sim.modality == ModalityPair::RgbT   ? "rgb-t"
                    : cfg.sim.modality == ModalityPair::RgbD   ? "rgb-d"
                                                               : "rgb-e";
    s["emit_ghosts"] = cfg.sim.emit_ghosts;
    s["feature_noise"] = cfg.sim.feature_noise;
    s["object_size"] = cfg.sim.object_size;
    s["allow_overlap"] = cfg.sim.allow_overlap;
    root["sim"] = s;
    json tr;
    tr["step_size"] = cfg.train.step_size;
    tr["steps"] = cfg.train.steps;
    root["train"] = tr;
    return root.dump(2) + "\n";
}

TrackerConfig tracker_config(const RunConfig& cfg, TrackMode mode) {
    TrackerConfig t;
    t.mode = mode;
    t.tau_mask = cfg.tracker.tau_mask;
    t.tau_th = cfg.tracker.tau_th;
    t.history = cfg.tracker.history;
    t.max_gap = cfg.tracker.max_gap;
    t.roi_size = cfg.tracker.roi_size;
    t.score_floor = cfg.tracker.score_floor;
    return t;
}

} // namespace moetrack
