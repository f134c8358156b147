#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "moetrack/metrics.hpp"
#include "moetrack/params_io.hpp"
#include "moetrack/train.hpp"

namespace fs = std::filesystem;
using namespace moetrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitContract = 2;
constexpr int kExitVerification = 3;

RunConfig load_run_config(const std::string& path, std::optional<uint64_t> seed_override) {
    RunConfig cfg = path.empty() ? config_from_json_text("{}") : load_config(path);
    if (seed_override) {
        cfg.seed = *seed_override;
        cfg.sim.seed = *seed_override;
    }
    return cfg;
}

EncoderParams make_encoder(const RunConfig& cfg) {
    Rng rng = Rng::stream(cfg.seed, 0x656e63ULL);
    return init_encoder(cfg.encoder.width, cfg.encoder.depth, cfg.encoder.patch,
                        cfg.encoder.heads, cfg.encoder.common_experts,
                        cfg.encoder.specific_experts, cfg.encoder.k_active, rng);
}

TrackerParams make_tracker(const RunConfig& cfg) {
    Rng rng = Rng::stream(cfg.seed, 0x74726bULL);
    return init_tracker(cfg.tracker.roi_size, cfg.encoder.width, cfg.tracker.embed_dim,
                        cfg.tracker.query_dim, cfg.tracker.query_tokens, rng);
}

void ensure_out(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    MTK_CONFIG_REQUIRE(!ec, "cannot create output directory: " + out);
}

std::string frame_results_to_string(const std::vector<FrameResult>& frames) {
    nlohmann::json header;
    header["format"] = "frame_results";
    header["version"] = kWireVersion;
    std::string out = header.dump() + "\n";
    for (const FrameResult& fr : frames) {
        nlohmann::json line;
        line["frame"] = fr.frame;
        nlohmann::json matches = nlohmann::json::array();
        for (const auto& [id, ci] : fr.matches) matches.push_back({id, ci});
        nlohmann::json fresh = nlohmann::json::array();
        for (const auto& [id, ci] : fr.new_ids) fresh.push_back({id, ci});
        line["matches"] = std::move(matches);
        line["new_ids"] = std::move(fresh);
        line["terminated"] = fr.terminated;
        out += line.dump() + "\n";
    }
    return out;
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 std::optional<uint64_t> seed) {
    const RunConfig cfg = load_run_config(config_path, seed);
    ensure_out(out);
    const SimSequence seq = generate_sequence(cfg.sim);
    const auto dets = oracle_detect(seq, cfg.sim);
    write_file(out + "/detections.jsonl",
               detections_to_string(cfg.sim.mask_height, cfg.sim.mask_width, dets));
    write_file(out + "/ground_truth.jsonl",
               ground_truth_to_string(cfg.sim.mask_height, cfg.sim.mask_width, seq.gt));
    int n_dets = 0;
    for (const FrameDetections& fd : dets) n_dets += static_cast<int>(fd.detections.size());
    std::printf("simulate: %d frames, %d objects, %d detections -> %s\n", cfg.sim.n_frames,
                cfg.sim.n_objects, n_dets, out.c_str());
    return kExitOk;
}

int cmd_track(const std::string& config_path, const std::string& detections_path,
              const std::string& out, std::optional<uint64_t> seed, const std::string& mode) {
    const RunConfig cfg = load_run_config(config_path, seed);
    MTK_CONFIG_REQUIRE(mode == "mot" || mode == "sot", "--mode must be 'mot' or 'sot'");
    MTK_CONFIG_REQUIRE(fs::exists(detections_path),
                       "detections file not found: " + detections_path);
    ensure_out(out);
    WireHeader header;
    const auto stream = detections_from_string(read_file(detections_path), &header);
    const TrackerParams params = make_tracker(cfg);
    const TrackerConfig tcfg =
        tracker_config(cfg, mode == "sot" ? TrackMode::Sot : TrackMode::Mot);
    const SequenceResult res = track_sequence(tcfg, params, stream);
    std::vector<TrackRecord> records = res.records;
    if (mode == "sot") {
        std::vector<TrackRecord> target_only;
        for (const TrackRecord& r : records)
            if (r.id == res.sot_target_id) target_only.push_back(r);
        records = std::move(target_only);
    }
    write_file(out + "/tracks.jsonl", tracks_to_string(header.mask_h, header.mask_w, records));
    write_file(out + "/frame_results.jsonl", frame_results_to_string(res.frames));
    std::printf("track: %zu frames, %zu records -> %s\n", res.frames.size(), records.size(),
                out.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& gt_path, const std::string& tracks_path, const std::string& out) {
    MTK_CONFIG_REQUIRE(fs::exists(gt_path), "ground-truth file not found: " + gt_path);
    MTK_CONFIG_REQUIRE(fs::exists(tracks_path), "tracks file not found: " + tracks_path);
    ensure_out(out);
    const auto gt = ground_truth_from_string(read_file(gt_path), nullptr);
    const auto tracks = tracks_from_string(read_file(tracks_path), nullptr);
    const MetricReport report = evaluate(gt, tracks);
    write_file(out + "/report.json", report_to_json(report));
    write_file(out + "/report.csv", report_to_csv(report));
    std::string log = "frame,gt_id,pred_id\n";
    for (const FrameMatchLog& l : report.log)
        log += std::to_string(l.frame) + "," + std::to_string(l.gt_id) + "," +
               std::to_string(l.pred_id) + "\n";
    write_file(out + "/match_log.csv", log);
    std::printf("eval: mota=%s idf1=%.6f idsw=%d fp=%d fn=%d\n",
                report.mota ? std::to_string(*report.mota).c_str() : "n/a", report.idf1,
                report.id_switches, report.fp, report.fn);
    return kExitOk;
}

int cmd_gradcheck(const std::string& config_path, const std::string& out,
                  std::optional<uint64_t> seed, double tolerance) {
    const RunConfig cfg = load_run_config(config_path, seed);
    MTK_REQUIRE(cfg.encoder.precision == Precision::F64,
                "gradcheck requires the 64-bit precision mode");
    // pinned verification geometry: width 8, depth 2, four tokens
    Rng rng = Rng::stream(cfg.seed, 0x6763ULL);
    EncoderParams enc = init_encoder(8, 2, 2, 2, cfg.encoder.common_experts,
                                     cfg.encoder.specific_experts,
                                     std::min(cfg.encoder.k_active, 2), rng);
    EncLossCtx ctx;
    ctx.frame_r = Mat(4, 4);
    ctx.frame_tde = Mat(4, 4);
    for (double& v : ctx.frame_r.d) v = rng.normal(0.0, 0.5);
    for (double& v : ctx.frame_tde->d) v = rng.normal(0.0, 0.5);
    ctx.label = cfg.sim.modality;
    ctx.mask_ratio = cfg.encoder.mask_ratio > 0.0 ? cfg.encoder.mask_ratio : 0.25;
    ctx.mask_seed = cfg.seed;

    const auto t0 = std::chrono::steady_clock::now();
    std::string text;
    bool pass = true;
    double worst = 0.0;
    for (const auto& [kind, name] :
         {std::pair{LossKind::CM, "l_cm"}, {LossKind::CE, "l_ce"}, {LossKind::TASK, "l_task"}}) {
        const GradCheckReport rep = grad_check(enc, ctx, kind, 1e-5, tolerance);
        pass = pass && rep.pass;
        worst = std::max(worst, rep.worst);
        char buf[256];
        for (const GradCheckBlock& b : rep.blocks) {
            std::snprintf(buf, sizeof(buf), "%s %s max_rel_err=%.3e%s\n", name, b.name.c_str(),
                          b.max_rel_err, b.frozen ? " frozen(grad=0)" : "");
            text += buf;
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char tail[128];
    std::snprintf(tail, sizeof(tail), "worst=%.3e tolerance=%.3e %s\n", worst, tolerance,
                  pass ? "PASS" : "FAIL");
    text += tail;
    if (!out.empty()) {
        ensure_out(out);
        write_file(out + "/gradcheck.txt", text);
    }
    std::printf("%s", text.c_str());
    std::printf("gradcheck: %.1f s\n", secs);
    return pass ? kExitOk : kExitVerification;
}

int cmd_train_toy(const std::string& config_path, const std::string& out,
                  std::optional<uint64_t> seed, std::optional<int> steps_flag) {
    const RunConfig cfg = load_run_config(config_path, seed);
    const int steps = steps_flag ? *steps_flag : cfg.train.steps;
    MTK_CONFIG_REQUIRE(steps >= 1, "--steps must be >= 1");
    ensure_out(out);
    EncoderParams enc = make_encoder(cfg);
    TrackerParams trk = make_tracker(cfg);
    const std::vector<uint8_t> frozen_before = snapshot_frozen(enc);
    const TrainResult result = train_toy(cfg, enc, trk, steps);
    write_file(out + "/losses.csv", losses_to_csv(result.curve));
    if (result.diverged) {
        std::fprintf(stderr, "train-toy: loss diverged (NaN) at step %d\n",
                     result.diverged_step);
        return kExitVerification;
    }
    MTK_REQUIRE(snapshot_frozen(enc) == frozen_before,
                "frozen shared expert changed during training");
    save_params(out + "/params.bin", enc, trk);
    const StepLosses& last = result.curve.back();
    std::printf("train-toy: %d steps, l_cm=%.6f l_ce=%.6f l_task=%.6f total=%.6f -> %s\n", steps,
                last.l_cm, last.l_ce, last.l_task, last.total, out.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixture-of-experts multi-modal tracker"};
    app.require_subcommand(1);

    std::string config_path, out = "out", detections_path, gt_path, tracks_path;
    std::string mode = "mot";
    std::optional<uint64_t> seed;
    std::optional<int> steps;
    double tolerance = 1e-5;

    CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic sequence");
    sim->add_option("--config", config_path, "config file (JSON)");
    sim->add_option("--out", out, "output directory");
    sim->add_option("--seed", seed, "seed override");

    CLI::App* trk = app.add_subcommand("track", "associate a detections stream");
    trk->add_option("--config", config_path, "config file (JSON)");
    trk->add_option("--detections", detections_path, "detections JSONL")->required();
    trk->add_option("--out", out, "output directory");
    trk->add_option("--seed", seed, "seed override");
    trk->add_option("--mode", mode, "tracking mode: mot or sot")
        ->check(CLI::IsMember({"mot", "sot"}));

    CLI::App* ev = app.add_subcommand("eval", "score tracks against ground truth");
    ev->add_option("--gt", gt_path, "ground-truth JSONL")->required();
    ev->add_option("--tracks", tracks_path, "tracks JSONL")->required();
    ev->add_option("--out", out, "output directory");

    CLI::App* gc = app.add_subcommand("gradcheck", "verify analytic gradients");
    gc->add_option("--config", config_path, "config file (JSON)");
    gc->add_option("--out", out, "output directory");
    gc->add_option("--seed", seed, "seed override");
    gc->add_option("--tolerance", tolerance, "max relative error");

    CLI::App* tt = app.add_subcommand("train-toy", "gradient-descent toy optimization");
    tt->add_option("--config", config_path, "config file (JSON)");
    tt->add_option("--out", out, "output directory");
    tt->add_option("--seed", seed, "seed override");
    tt->add_option("--steps", steps, "step count override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out, seed);
        if (trk->parsed()) return cmd_track(config_path, detections_path, out, seed, mode);
        if (ev->parsed()) return cmd_eval(gt_path, tracks_path, out);
        if (gc->parsed()) return cmd_gradcheck(config_path, out, seed, tolerance);
        if (tt->parsed()) return cmd_train_toy(config_path, out, seed, steps);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const contract_error& e) {
        std::fprintf(stderr, "contract violation: %s\n", e.what());
        return kExitContract;
    } catch (const verification_error& e) {
        std::fprintf(stderr, "verification failure: %s\n", e.what());
        return kExitVerification;
    }
    return kExitConfig;
}
