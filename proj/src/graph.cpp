#include "moetrack/graph.hpp"

#include <cmath>
#include <unordered_map>

namespace moetrack {

namespace {

struct Lifter {
    Tape& t;
    std::unordered_map<std::string, int> ids;
    std::vector<std::pair<std::string, int>> named;

    void lift_all(const ParamRegistry& reg) {
        for (const ParamRef& p : reg) {
            const int id = t.leaf(*p.mat, /*needs_grad=*/!p.frozen);
            ids.emplace(p.name, id);
            named.emplace_back(p.name, id);
        }
    }

    int id(const std::string& name) const {
        auto it = ids.find(name);
        MTK_REQUIRE(it != ids.end(), "lift: unknown parameter block " + name);
        return it->second;
    }

    TExpert expert(const std::string& p) const {
        return {id(p + ".w1"), id(p + ".b1"), id(p + ".w2"), id(p + ".b2")};
    }
    TRouter router(const std::string& p, int k_active) const {
        return {id(p + ".w"), id(p + ".b"), k_active};
    }
};

int t_ones_col(Tape& t, int rows) { return t.leaf(Mat(rows, 1, 1.0)); }
int t_ones_row(Tape& t, int cols) { return t.leaf(Mat(1, cols, 1.0)); }

int t_expert_fwd(Tape& t, const TExpert& e, int x) {
    const int h = t.gelu(t_linear(t, x, e.w1, e.b1));
    return t_linear(t, h, e.w2, e.b2);
}

/// N x E renormalized sparse gate matrix; the top-k pick happens on values
/// and enters the graph as a constant indicator.
int t_sparse_gates(Tape& t, const TRouter& r, int x) {
    const int logits = t_linear(t, x, r.w, r.b);
    const int probs = t.softmax_rows(logits);
    const int n_experts = t.val(probs).cols;
    Mat ind(t.val(probs).rows, n_experts);
    std::vector<double> row(static_cast<size_t>(n_experts));
    {
        const Mat& pv = t.val(probs);
        for (int i = 0; i < pv.rows; ++i) {
            for (int j = 0; j < n_experts; ++j) row[static_cast<size_t>(j)] = pv.at(i, j);
            for (int j : top_k_select(row, std::min(r.k_active, n_experts))) ind.at(i, j) = 1.0;
        }
    }
    const int keep = t.leaf(std::move(ind));
    const int z = t.hadamard(probs, keep);
    const int denom = t.matmul(t.row_sum(z), t_ones_row(t, n_experts));
    return t.divide(z, denom);
}

/// Gate-weighted sum of dense expert outputs; raw outputs returned for the
/// orthogonality loss.
std::pair<int, std::vector<int>> t_gated_mixture(Tape& t, const std::vector<TExpert>& experts,
                                                 int gates, int x, int width) {
    std::vector<int> raw;
    const int ones_c = t_ones_row(t, width);
    int acc = -1;
    for (size_t n = 0; n < experts.size(); ++n) {
        const int y = t_expert_fwd(t, experts[n], x);
        raw.push_back(y);
        const int col = t.col_slice(gates, static_cast<int>(n), static_cast<int>(n) + 1);
        const int wy = t.hadamard(t.matmul(col, ones_c), y);
        acc = (acc < 0) ? wy : t.add(acc, wy);
    }
    return {acc, raw};
}

int t_msa(Tape& t, const TMsa& a, int x) {
    const int y = t_layer_norm(t, x, a.ln_g, a.ln_b);
    const int q = t_linear(t, y, a.wq, a.bq);
    const int k = t_linear(t, y, a.wk, a.bk);
    const int v = t_linear(t, y, a.wv, a.bv);
    const int c = t.val(x).cols;
    const int dh = c / a.heads;
    std::vector<int> heads;
    for (int h = 0; h < a.heads; ++h) {
        const int qh = t.col_slice(q, h * dh, (h + 1) * dh);
        const int kh = t.col_slice(k, h * dh, (h + 1) * dh);
        const int vh = t.col_slice(v, h * dh, (h + 1) * dh);
        heads.push_back(t_attention(t, qh, kh, vh));
    }
    const int mixed = a.heads == 1 ? heads[0] : t.concat_cols(heads);
    return t.add(x, t_linear(t, mixed, a.wo, a.bo));
}

int t_patch_embed(Tape& t, const EncGraph& g, const Mat& frame) {
    const int p = g.patch;
    MTK_REQUIRE(frame.rows % p == 0 && frame.cols % p == 0,
                "patch_embed: frame size not divisible by patch size");
    const int gh = frame.rows / p;
    const int gw = frame.cols / p;
    Mat flat(gh * gw, p * p);
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx)
            for (int py = 0; py < p; ++py)
                for (int px = 0; px < p; ++px)
                    flat.at(gy * gw + gx, py * p + px) = frame.at(gy * p + py, gx * p + px);
    return t_linear(t, t.leaf(std::move(flat)), g.patch_w, g.patch_b);
}

int t_apply_mask(Tape& t, int x, const std::vector<int>& rows, int mask_token) {
    const Mat& xv = t.val(x);
    Mat keep(xv.rows, xv.cols, 1.0);
    Mat pick(xv.rows, 1, 0.0);
    for (int r : rows) {
        MTK_REQUIRE(r >= 0 && r < xv.rows, "mask row out of range");
        for (int j = 0; j < xv.cols; ++j) keep.at(r, j) = 0.0;
        pick.at(r, 0) = 1.0;
    }
    return t.add(t.hadamard(x, t.leaf(std::move(keep))),
                 t.matmul(t.leaf(std::move(pick)), mask_token));
}

} // namespace

int t_linear(Tape& t, int x, int w, int b) {
    const int xw = t.matmul(x, w);
    const int bb = t.matmul(t_ones_col(t, t.val(x).rows), b);
    return t.add(xw, bb);
}

int t_layer_norm(Tape& t, int x, int g, int b) {
    constexpr double kEps = 1e-5;
    const int rows = t.val(x).rows;
    const int cols = t.val(x).cols;
    const int ones_c = t_ones_row(t, cols);
    const int ones_n = t_ones_col(t, rows);
    const int mean = t.scale(t.row_sum(x), 1.0 / cols);
    const int xm = t.sub(x, t.matmul(mean, ones_c));
    const int var = t.scale(t.row_sum(t.hadamard(xm, xm)), 1.0 / cols);
    const int sd = t.sqrt(t.add_const(var, kEps));
    const int xn = t.divide(xm, t.matmul(sd, ones_c));
    return t.add(t.hadamard(xn, t.matmul(ones_n, g)), t.matmul(ones_n, b));
}

int t_attention(Tape& t, int q, int k, int v) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(t.val(q).cols));
    const int logits = t.scale(t.matmul(q, t.transpose(k)), inv);
    return t.matmul(t.softmax_rows(logits), v);
}

int t_mse_vs_const(Tape& t, int a, const Mat& target) {
    const int d = t.sub(a, t.leaf(target));
    return t.scale(t.sum_all(t.hadamard(d, d)), 1.0 / static_cast<double>(target.size()));
}

int t_l2_normalize_rows(Tape& t, int x) {
    const int cols = t.val(x).cols;
    const int nrm = t.sqrt(t.clamp_min(t.row_sum(t.hadamard(x, x)), 1e-24));
    return t.divide(x, t.matmul(nrm, t_ones_row(t, cols)));
}

EncGraph lift_encoder(Tape& t, EncoderParams& p) {
    Lifter lf{t, {}, {}};
    lf.lift_all(collect_params(p));
    EncGraph g;
    g.width = p.width;
    g.depth = p.depth;
    g.patch = p.patch;
    g.heads = p.heads;
    g.n_common = p.n_common;
    g.n_specific = p.n_specific;
    g.k_active = p.k_active;
    g.patch_w = lf.id("patch.w");
    g.patch_b = lf.id("patch.b");
    for (size_t l = 0; l < p.layers.size(); ++l) {
        const std::string lp = "layer" + std::to_string(l);
        TEncLayer layer;
        layer.msa = {lf.id(lp + ".msa.ln_g"), lf.id(lp + ".msa.ln_b"), lf.id(lp + ".msa.wq"),
                     lf.id(lp + ".msa.bq"),   lf.id(lp + ".msa.wk"),   lf.id(lp + ".msa.bk"),
                     lf.id(lp + ".msa.wv"),   lf.id(lp + ".msa.bv"),   lf.id(lp + ".msa.wo"),
                     lf.id(lp + ".msa.bo"),   p.heads};
        layer.moe.shared = lf.expert(lp + ".moe.shared");
        for (int n = 0; n < p.n_common; ++n)
            layer.moe.common.push_back(lf.expert(lp + ".moe.common" + std::to_string(n)));
        for (int n = 0; n < p.n_specific; ++n)
            layer.moe.spec_r.push_back(lf.expert(lp + ".moe.spec_r" + std::to_string(n)));
        for (int n = 0; n < p.n_specific; ++n)
            layer.moe.spec_tde.push_back(lf.expert(lp + ".moe.spec_tde" + std::to_string(n)));
        layer.moe.router_common = lf.router(lp + ".moe.router_common", p.k_active);
        layer.moe.router_r = lf.router(lp + ".moe.router_r", p.k_active);
        layer.moe.router_tde = lf.router(lp + ".moe.router_tde", p.k_active);
        layer.moe.router_crossmodal = lf.router(lp + ".moe.router_crossmodal", kModalityClasses);
        layer.moe.proj_r_w = lf.id(lp + ".moe.proj_r.w");
        layer.moe.proj_r_b = lf.id(lp + ".moe.proj_r.b");
        layer.moe.proj_tde_w = lf.id(lp + ".moe.proj_tde.w");
        layer.moe.proj_tde_b = lf.id(lp + ".moe.proj_tde.b");
        layer.moe.mask_token = lf.id(lp + ".moe.mask_token");
        g.layers.push_back(layer);
    }
    g.named = std::move(lf.named);
    return g;
}

TapeForward tape_encoder_forward(Tape& t, const EncGraph& g, const Mat& frame_r,
                                 const Mat* frame_tde, const MaskPlan* mask) {
    const bool tde_present = frame_tde != nullptr;
    int x_r = t_patch_embed(t, g, frame_r);
    int x_tde = tde_present ? t_patch_embed(t, g, *frame_tde) : x_r;
    TapeForward out;

    for (size_t l = 0; l < g.layers.size(); ++l) {
        const TEncLayer& layer = g.layers[l];
        if (mask && l < mask->rows.size() && !mask->rows[l].empty()) {
            if (mask->modality == 0)
                x_r = t_apply_mask(t, x_r, mask->rows[l], layer.moe.mask_token);
            else
                x_tde = t_apply_mask(t, x_tde, mask->rows[l], layer.moe.mask_token);
        }
        const int t_r = t_msa(t, layer.msa, x_r);
        const int t_tde = t_msa(t, layer.msa, x_tde);

        TapeLayerOut lo;
        lo.t_r = t_r;
        lo.t_tde = t_tde;
        // common-prompt path
        const int tg_r = t_expert_fwd(t, layer.moe.shared, t_r);
        const int tg_tde = t_expert_fwd(t, layer.moe.shared, t_tde);
        const int gates_r = t_sparse_gates(t, layer.moe.router_common, t_r);
        const int gates_tde = t_sparse_gates(t, layer.moe.router_common, t_tde);
        auto [prompt_r, raw_r] = t_gated_mixture(t, layer.moe.common, gates_r, t_r, g.width);
        auto [prompt_tde, raw_tde] =
            t_gated_mixture(t, layer.moe.common, gates_tde, t_tde, g.width);
        lo.common_raw_r = raw_r;
        lo.common_raw_tde = raw_tde;
        const int pr = t_linear(t, prompt_r, layer.moe.proj_r_w, layer.moe.proj_r_b);
        const int pt = t_linear(t, prompt_tde, layer.moe.proj_tde_w, layer.moe.proj_tde_b);
        const int p_g = t.hadamard(pr, pt);
        lo.hg_r = t.add(p_g, tg_r);
        lo.hg_tde = t.add(p_g, tg_tde);
        // specific path
        auto [hs_r, sraw_r] = t_gated_mixture(
            t, layer.moe.spec_r, t_sparse_gates(t, layer.moe.router_r, t_r), t_r, g.width);
        lo.hs_r = hs_r;
        lo.spec_raw_r = sraw_r;
        if (tde_present) {
            auto [hs_tde, sraw_tde] =
                t_gated_mixture(t, layer.moe.spec_tde,
                                t_sparse_gates(t, layer.moe.router_tde, t_tde), t_tde, g.width);
            lo.hs_tde = hs_tde;
            lo.spec_raw_tde = sraw_tde;
        } else {
            lo.hs_tde = t.leaf(Mat(t.val(t_tde).rows, g.width));
        }
        // cross-modal router logits, token mean over both streams
        const int lg_r =
            t_linear(t, t_r, layer.moe.router_crossmodal.w, layer.moe.router_crossmodal.b);
        const int lg_t =
            t_linear(t, t_tde, layer.moe.router_crossmodal.w, layer.moe.router_crossmodal.b);
        const int n_rows = t.val(t_r).rows;
        const int pooled = t.matmul(t.leaf(Mat(1, n_rows, 1.0)), t.add(lg_r, lg_t));
        lo.crossmodal_logits = t.scale(pooled, 1.0 / (2.0 * n_rows));

        x_r = t.add(t.add(lo.hg_r, lo.hs_r), t_r);
        x_tde = t.add(t.add(lo.hg_tde, lo.hs_tde), t_tde);
        lo.f_r = x_r;
        lo.f_tde = x_tde;
        out.layers.push_back(std::move(lo));
    }
    out.f_u = t.add(x_r, x_tde);
    return out;
}

MaskPlan make_mask_plan(int n_tokens, int n_layers, double mask_ratio, uint64_t seed) {
    MTK_REQUIRE(mask_ratio >= 0.0 && mask_ratio <= 1.0, "mask_ratio must be in [0, 1]");
    Rng rng = Rng::stream(seed, /*stream_id=*/0x6d61736bULL);
    MaskPlan plan;
    plan.modality = static_cast<int>(rng.uniform_int(2));
    const int count = static_cast<int>(std::ceil(mask_ratio * n_tokens));
    plan.rows.resize(static_cast<size_t>(n_layers));
    for (int l = 0; l < n_layers; ++l)
        plan.rows[static_cast<size_t>(l)] = count > 0 ? rng.sample_indices(n_tokens, count)
                                                      : std::vector<int>{};
    return plan;
}

CmTargets cm_targets(const EncoderParams& params, const EncLossCtx& ctx) {
    ForwardRecords rec;
    encoder_forward(params, ctx.frame_r, ctx.frame_tde ? &*ctx.frame_tde : nullptr, &rec);
    CmTargets out;
    for (const LayerRecord& lr : rec.layers) out.emplace_back(lr.hg_r, lr.hg_tde);
    return out;
}

int tape_loss_cm(Tape& t, const EncGraph& g, const EncLossCtx& ctx, const CmTargets& targets,
                 const MaskPlan& plan) {
    const TapeForward fwd =
        tape_encoder_forward(t, g, ctx.frame_r, ctx.frame_tde ? &*ctx.frame_tde : nullptr, &plan);
    MTK_REQUIRE(targets.size() == fwd.layers.size(), "loss_cm: target layer count mismatch");
    int acc = t.leaf(Mat(1, 1), /*needs_grad=*/false);
    for (size_t l = 0; l < fwd.layers.size(); ++l) {
        acc = t.add(acc, t_mse_vs_const(t, fwd.layers[l].hg_r, targets[l].first));
        acc = t.add(acc, t_mse_vs_const(t, fwd.layers[l].hg_tde, targets[l].second));
    }
    return acc;
}

int tape_loss_ce(Tape& t, const TapeForward& fwd, bool tde_present, int n_tokens) {
    constexpr double kNormFloor = 1e-8;
    int acc = t.leaf(Mat(1, 1), false);
    for (const TapeLayerOut& lo : fwd.layers) {
        for (int modality = 0; modality < (tde_present ? 2 : 1); ++modality) {
            const std::vector<int>& common = modality == 0 ? lo.common_raw_r : lo.common_raw_tde;
            const std::vector<int>& spec = modality == 0 ? lo.spec_raw_r : lo.spec_raw_tde;
            if (common.empty() || spec.empty()) continue;
            int u = common[0];
            for (size_t i = 1; i < common.size(); ++i) u = t.add(u, common[i]);
            for (int vj : spec) {
                const int num = t.row_sum(t.hadamard(u, vj));
                const int den = t.row_sum(t.hadamard(vj, vj));
                // tokens with near-zero specific output are excluded
                const Mat& dv = t.val(den);
                Mat keep(dv.rows, 1), inv_keep(dv.rows, 1);
                for (int i = 0; i < dv.rows; ++i) {
                    const bool kept = dv.at(i, 0) >= kNormFloor * kNormFloor;
                    keep.at(i, 0) = kept ? 1.0 : 0.0;
                    inv_keep.at(i, 0) = kept ? 0.0 : 1.0;
                }
                const int keep_id = t.leaf(std::move(keep));
                const int den_safe = t.add(t.hadamard(den, keep_id), t.leaf(std::move(inv_keep)));
                const int q = t.divide(t.hadamard(num, num), den_safe);
                const int term =
                    t.scale(t.sum_all(t.hadamard(q, keep_id)), 1.0 / static_cast<double>(n_tokens));
                acc = t.add(acc, term);
            }
        }
    }
    return acc;
}

int tape_loss_task(Tape& t, const TapeForward& fwd, ModalityPair label) {
    const int cls = static_cast<int>(label);
    MTK_REQUIRE(cls >= 0 && cls < kModalityClasses, "loss_task: label out of range");
    int acc = t.leaf(Mat(1, 1), false);
    for (const TapeLayerOut& lo : fwd.layers) {
        const int probs = t.softmax_rows(lo.crossmodal_logits);
        const int p = t.element(probs, 0, cls);
        acc = t.add(acc, t.scale(t.log(p), -1.0));
    }
    return acc;
}

double loss_cm(const EncoderParams& params, const EncLossCtx& ctx) {
    const CmTargets targets = cm_targets(params, ctx);
    const int n_tokens =
        token_count(ctx.frame_r.rows, ctx.frame_r.cols, params.patch);
    const MaskPlan plan =
        make_mask_plan(n_tokens, params.depth, ctx.mask_ratio, ctx.mask_seed);
    ForwardRecords rec;
    encoder_forward(params, ctx.frame_r, ctx.frame_tde ? &*ctx.frame_tde : nullptr, &rec, &plan);
    double acc = 0.0;
    for (size_t l = 0; l < rec.layers.size(); ++l) {
        acc += mse(rec.layers[l].hg_r, targets[l].first);
        acc += mse(rec.layers[l].hg_tde, targets[l].second);
    }
    return acc;
}

double loss_ce(const ForwardRecords& rec, bool tde_present) {
    constexpr double kNormFloor = 1e-8;
    double acc = 0.0;
    for (const LayerRecord& lo : rec.layers) {
        for (int modality = 0; modality < (tde_present ? 2 : 1); ++modality) {
            const std::vector<Mat>& common = modality == 0 ? lo.common_raw_r : lo.common_raw_tde;
            const std::vector<Mat>& spec = modality == 0 ? lo.spec_raw_r : lo.spec_raw_tde;
            if (common.empty() || spec.empty()) continue;
            Mat u = common[0];
            for (size_t i = 1; i < common.size(); ++i) u = add(u, common[i]);
            const int n = u.rows;
            for (const Mat& vj : spec) {
                double sum = 0.0;
                for (int i = 0; i < n; ++i) {
                    double num = 0.0, den = 0.0;
                    for (int j = 0; j < u.cols; ++j) {
                        num += u.at(i, j) * vj.at(i, j);
                        den += vj.at(i, j) * vj.at(i, j);
                    }
                    if (den < kNormFloor * kNormFloor) continue;
                    sum += num * num / den;
                }
                acc += sum * (1.0 / static_cast<double>(n));
            }
        }
    }
    return acc;
}

double loss_task(const ForwardRecords& rec, ModalityPair label) {
    const int cls = static_cast<int>(label);
    MTK_REQUIRE(cls >= 0 && cls < kModalityClasses, "loss_task: label out of range");
    double acc = 0.0;
    for (const LayerRecord& lo : rec.layers) {
        const std::vector<double> p = softmax(lo.crossmodal_logits);
        acc += -std::log(p[static_cast<size_t>(cls)]);
    }
    return acc;
}

double loss_moe_total(double l_cm, double l_ce, double mu, double lambda) {
    MTK_REQUIRE(mu >= 0.0 && lambda >= 0.0, "loss weights must be nonnegative");
    return mu * l_cm + lambda * l_ce;
}

namespace {

struct BuiltLoss {
    Tape tape;
    EncGraph graph;
    int loss = -1;
};

/// Build the requested loss graph at the current parameter values.
void build_loss(BuiltLoss& b, EncoderParams& params, const EncLossCtx& ctx, LossKind kind,
                const CmTargets* pinned_targets) {
    b.graph = lift_encoder(b.tape, params);
    const Mat* tde = ctx.frame_tde ? &*ctx.frame_tde : nullptr;
    const bool tde_present = tde != nullptr;
    if (kind == LossKind::CM) {
        const int n_tokens = token_count(ctx.frame_r.rows, ctx.frame_r.cols, params.patch);
        const MaskPlan plan = make_mask_plan(n_tokens, params.depth, ctx.mask_ratio, ctx.mask_seed);
        CmTargets local;
        const CmTargets* targets = pinned_targets;
        if (!targets) {
            local = cm_targets(params, ctx);
            targets = &local;
        }
        b.loss = tape_loss_cm(b.tape, b.graph, ctx, *targets, plan);
    } else {
        const TapeForward fwd = tape_encoder_forward(b.tape, b.graph, ctx.frame_r, tde);
        const int n_tokens = token_count(ctx.frame_r.rows, ctx.frame_r.cols, params.patch);
        b.loss = kind == LossKind::CE ? tape_loss_ce(b.tape, fwd, tde_present, n_tokens)
                                      : tape_loss_task(b.tape, fwd, ctx.label);
    }
}

} // namespace

double eval_loss_value(EncoderParams& params, const EncLossCtx& ctx, LossKind kind,
                       const CmTargets* pinned_targets) {
    BuiltLoss b;
    build_loss(b, params, ctx, kind, pinned_targets);
    return b.tape.val(b.loss).at(0, 0);
}

std::map<std::string, Mat> eval_loss_grads(EncoderParams& params, const EncLossCtx& ctx,
                                           LossKind kind, const CmTargets* pinned_targets,
                                           double* value_out) {
    BuiltLoss b;
    build_loss(b, params, ctx, kind, pinned_targets);
    if (value_out) *value_out = b.tape.val(b.loss).at(0, 0);
    b.tape.backward(b.loss);
    std::map<std::string, Mat> grads;
    for (const auto& [name, id] : b.graph.named) {
        // frozen leaves and blocks the loss never touches report exact zeros
        if (b.tape.needs_grad(id) && b.tape.has_grad(id))
            grads.emplace(name, b.tape.grad(id));
        else
            grads.emplace(name, Mat(b.tape.val(id).rows, b.tape.val(id).cols));
    }
    return grads;
}

GradCheckReport grad_check_fd(const ParamRegistry& reg, const std::function<double()>& eval,
                              const std::map<std::string, Mat>& analytic, double eps, double tol) {
    GradCheckReport report;
    report.epsilon = eps;
    report.tolerance = tol;
    for (const ParamRef& p : reg) {
        GradCheckBlock block;
        block.name = p.name;
        block.frozen = p.frozen;
        if (!p.frozen) {
            const auto it = analytic.find(p.name);
            MTK_REQUIRE(it != analytic.end(), "grad_check: missing analytic block " + p.name);
            const Mat& a = it->second;
            Mat& theta = *p.mat;
            for (size_t i = 0; i < theta.size(); ++i) {
                const double saved = theta.d[i];
                theta.d[i] = saved + eps;
                const double up = eval();
                theta.d[i] = saved - eps;
                const double dn = eval();
                theta.d[i] = saved;
                const double numeric = (up - dn) / (2.0 * eps);
                const double denom = std::max({1.0, std::fabs(a.d[i]), std::fabs(numeric)});
                block.max_rel_err = std::max(block.max_rel_err,
                                             std::fabs(a.d[i] - numeric) / denom);
            }
        }
        report.worst = std::max(report.worst, block.max_rel_err);
        report.blocks.push_back(std::move(block));
    }
    report.pass = report.worst < tol;
    return report;
}

GradCheckReport grad_check(EncoderParams& params, const EncLossCtx& ctx, LossKind kind,
                           double eps, double tol) {
    CmTargets pinned;
    const CmTargets* targets = nullptr;
    if (kind == LossKind::CM) {
        pinned = cm_targets(params, ctx);
        targets = &pinned;
    }
    const std::map<std::string, Mat> analytic =
        eval_loss_grads(params, ctx, kind, targets);
    const ParamRegistry reg = collect_params(params);
    auto eval = [&]() { return eval_loss_value(params, ctx, kind, targets); };
    return grad_check_fd(reg, eval, analytic, eps, tol);
}

} // namespace moetrack
