#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moetrack/params.hpp"
#include "moetrack/tape.hpp"

namespace moetrack {

/// Tape handles mirroring EncoderParams, plus the registry-ordered name map
/// used to pull gradients out after backward().
struct TExpert {
    int w1, b1, w2, b2;
};
struct TRouter {
    int w, b;
    int k_active;
};
struct TMoeLayer {
    TExpert shared;
    std::vector<TExpert> common, spec_r, spec_tde;
    TRouter router_common, router_r, router_tde, router_crossmodal;
    int proj_r_w, proj_r_b, proj_tde_w, proj_tde_b, mask_token;
};
struct TMsa {
    int ln_g, ln_b, wq, bq, wk, bk, wv, bv, wo, bo;
    int heads;
};
struct TEncLayer {
    TMsa msa;
    TMoeLayer moe;
};
struct EncGraph {
    int width, depth, patch, heads, n_common, n_specific, k_active;
    int patch_w, patch_b;
    std::vector<TEncLayer> layers;
    std::vector<std::pair<std::string, int>> named;  // registry order
};

EncGraph lift_encoder(Tape& t, EncoderParams& p);

struct TapeLayerOut {
    int t_r, t_tde, hg_r, hg_tde, hs_r, hs_tde, f_r, f_tde;
    std::vector<int> common_raw_r, common_raw_tde, spec_raw_r, spec_raw_tde;
    int crossmodal_logits;  // 1 x 4
};
struct TapeForward {
    std::vector<TapeLayerOut> layers;
    int f_u;
};

TapeForward tape_encoder_forward(Tape& t, const EncGraph& g, const Mat& frame_r,
                                 const Mat* frame_tde, const MaskPlan* mask = nullptr);

// shared composition helpers, also used by the association graph
int t_linear(Tape& t, int x, int w, int b);
int t_layer_norm(Tape& t, int x, int g, int b);
int t_attention(Tape& t, int q, int k, int v);
int t_mse_vs_const(Tape& t, int a, const Mat& target);
int t_l2_normalize_rows(Tape& t, int x);

/// Draw the mask plan for the complementary loss: one modality pick, then one
/// row subset per layer, all from the given seed.
MaskPlan make_mask_plan(int n_tokens, int n_layers, double mask_ratio, uint64_t seed);

struct EncLossCtx {
    Mat frame_r;
    std::optional<Mat> frame_tde;
    ModalityPair label = ModalityPair::RgbOnly;
    double mask_ratio = 0.25;
    uint64_t mask_seed = 0;
};

using CmTargets = std::vector<std::pair<Mat, Mat>>;  // per layer (hg_r, hg_tde)

/// Targets of the complementary loss = per-layer prompted tokens of an
/// unmasked pass; they enter the loss as constants (no gradient).
CmTargets cm_targets(const EncoderParams& params, const EncLossCtx& ctx);

int tape_loss_cm(Tape& t, const EncGraph& g, const EncLossCtx& ctx, const CmTargets& targets,
                 const MaskPlan& plan);
int tape_loss_ce(Tape& t, const TapeForward& fwd, bool tde_present, int n_tokens);
int tape_loss_task(Tape& t, const TapeForward& fwd, ModalityPair label);

// plain (value-only) loss operations
double loss_cm(const EncoderParams& params, const EncLossCtx& ctx);
double loss_ce(const ForwardRecords& rec, bool tde_present);
double loss_task(const ForwardRecords& rec, ModalityPair label);
double loss_moe_total(double l_cm, double l_ce, double mu, double lambda);

struct LossReport {
    double l_cm = 0, l_ce = 0, l_task = 0;
    double total = 0;
    double mu = 1.0, lambda = 1.0;
};

enum class LossKind { CM, CE, TASK };

/// Loss value an analytic/finite-difference pair agrees on: for CM the
/// targets are pinned at the evaluation point handed in.
double eval_loss_value(EncoderParams& params, const EncLossCtx& ctx, LossKind kind,
                       const CmTargets* pinned_targets);

/// One backward pass; gradients for every registry block (zeros for frozen).
std::map<std::string, Mat> eval_loss_grads(EncoderParams& params, const EncLossCtx& ctx,
                                           LossKind kind, const CmTargets* pinned_targets,
                                           double* value_out = nullptr);

struct GradCheckBlock {
    std::string name;
    double max_rel_err = 0.0;
    bool frozen = false;
};
struct GradCheckReport {
    double epsilon = 1e-5;
    double tolerance = 1e-5;
    bool pass = false;
    double worst = 0.0;
    std::vector<GradCheckBlock> blocks;
};

/// Generic central-difference check of `analytic` against `eval` over every
/// non-frozen registry block. `eval` reads parameters through the registry.
GradCheckReport grad_check_fd(const ParamRegistry& reg, const std::function<double()>& eval,
                              const std::map<std::string, Mat>& analytic, double eps, double tol);

/// Spec'd gradient check of one encoder loss.
GradCheckReport grad_check(EncoderParams& params, const EncLossCtx& ctx, LossKind kind,
                           double eps = 1e-5, double tol = 1e-5);

} // namespace moetrack
