#pragma once

#include <optional>
#include <type_traits>
#include <vector>

#include "moetrack/ops.hpp"
#include "moetrack/rng.hpp"

namespace moetrack {

/// Two linear layers around a GELU; the hidden width is width/8.
template <typename T>
struct ExpertT {
    MatT<T> w1;  // C x k
    MatT<T> b1;  // 1 x k
    MatT<T> w2;  // k x C
    MatT<T> b2;  // 1 x C
};

template <typename T>
struct RouterT {
    MatT<T> w;  // C x E
    MatT<T> b;  // 1 x E
    int k_active = 2;
};

/// All weights of one mixture layer: frozen shared expert, gated common
/// experts with the cross-modal prompt path, per-modality specific experts,
/// routers, projections and the learnable mask token.
template <typename T>
struct MoeLayerT {
    ExpertT<T> shared;                  // frozen during optimization
    std::vector<ExpertT<T>> common;     // modality-common experts
    std::vector<ExpertT<T>> spec_r;     // RGB-specific experts
    std::vector<ExpertT<T>> spec_tde;   // auxiliary-modality experts
    RouterT<T> router_common;
    RouterT<T> router_r;
    RouterT<T> router_tde;
    RouterT<T> router_crossmodal;       // E = 4 modality-pair classes
    MatT<T> proj_r_w, proj_r_b;         // affine C -> C, identity-initialized
    MatT<T> proj_tde_w, proj_tde_b;
    MatT<T> mask_token;                 // 1 x C
};

template <typename T>
struct MsaT {
    MatT<T> ln_g, ln_b;                 // pre-norm scale/shift, 1 x C
    MatT<T> wq, bq, wk, bk, wv, bv, wo, bo;
    int heads = 2;
};

template <typename T>
struct EncoderLayerT {
    MsaT<T> msa;
    MoeLayerT<T> moe;
};

template <typename T>
struct EncoderT {
    int width = 32;       // channel width C
    int depth = 2;        // layer count L
    int patch = 8;        // patch size P
    int heads = 2;
    int n_common = 4;
    int n_specific = 4;
    int k_active = 2;
    MatT<T> patch_w;      // P*P x C
    MatT<T> patch_b;      // 1 x C
    std::vector<EncoderLayerT<T>> layers;
};

using Expert = ExpertT<double>;
using Router = RouterT<double>;
using MoeLayerParams = MoeLayerT<double>;
using MsaParams = MsaT<double>;
using EncoderParams = EncoderT<double>;

enum class ModalityPair { RgbOnly = 0, RgbT = 1, RgbD = 2, RgbE = 3 };
inline constexpr int kModalityClasses = 4;

/// Masking plan for the complementary-learning loss: at each layer input the
/// listed rows of one modality stream are replaced by that layer's mask token.
struct MaskPlan {
    int modality = 0;                        // 0 = RGB stream, 1 = TDE stream
    std::vector<std::vector<int>> rows;      // one ascending list per layer
};

/// Per-layer tensors retained by a forward pass for the decoupling losses.
struct LayerRecord {
    Mat input_r, input_tde;     // layer inputs (pre-MSA)
    Mat t_r, t_tde;             // mixture-layer inputs (MSA outputs)
    Mat hg_r, hg_tde;           // common-prompted tokens
    Mat hs_r, hs_tde;           // specific tokens
    Mat f_r, f_tde;             // layer outputs
    std::vector<Mat> common_raw_r, common_raw_tde;  // per common expert
    std::vector<Mat> spec_raw_r, spec_raw_tde;      // per specific expert
    std::vector<double> crossmodal_logits;          // 1 x 4, token-mean
};

struct ForwardRecords {
    std::vector<LayerRecord> layers;
    Mat f_u;  // unified representation
};

template <typename T>
MatT<T> expert_forward(const ExpertT<T>& e, const MatT<T>& tokens) {
    MTK_REQUIRE(tokens.cols == e.w1.rows, "expert_forward: token width mismatch");
    const MatT<T> h = gelu_mat(add_rowvec(matmul(tokens, e.w1), e.b1));
    return add_rowvec(matmul(h, e.w2), e.b2);
}

template <typename T>
std::vector<GateVecT<T>> route(const RouterT<T>& r, const MatT<T>& tokens) {
    MTK_REQUIRE(tokens.cols == r.w.rows, "route: token width mismatch");
    const MatT<T> logits = add_rowvec(matmul(tokens, r.w), r.b);
    std::vector<GateVecT<T>> out;
    out.reserve(static_cast<size_t>(tokens.rows));
    std::vector<T> row(static_cast<size_t>(logits.cols));
    for (int i = 0; i < logits.rows; ++i) {
        for (int j = 0; j < logits.cols; ++j) row[static_cast<size_t>(j)] = logits.at(i, j);
        out.push_back(sparse_gate(row, r.k_active));
    }
    return out;
}

/// Weighted sum of expert outputs under per-token gates. Expert outputs are
/// evaluated densely; inactive experts contribute with weight exactly zero.
template <typename T>
MatT<T> gated_mixture(const std::vector<ExpertT<T>>& experts,
                      const std::vector<GateVecT<T>>& gates, const MatT<T>& tokens,
                      std::vector<MatT<T>>* raw_out = nullptr) {
    MatT<T> acc(tokens.rows, tokens.cols);
    for (size_t n = 0; n < experts.size(); ++n) {
        MatT<T> y = expert_forward(experts[n], tokens);
        for (int i = 0; i < tokens.rows; ++i) {
            const T w = gates[static_cast<size_t>(i)].weight_of(static_cast<int>(n));
            if (w != T(0))
                for (int j = 0; j < tokens.cols; ++j) acc.at(i, j) += w * y.at(i, j);
        }
        if (raw_out) raw_out->push_back(std::move(y));
    }
    return acc;
}

template <typename T>
struct CpmoeOut {
    MatT<T> hg_r, hg_tde, p_g;
};

template <typename T>
CpmoeOut<T> cpmoe_forward(const MoeLayerT<T>& p, const MatT<T>& t_r, const MatT<T>& t_tde,
                          std::vector<MatT<T>>* raw_r = nullptr,
                          std::vector<MatT<T>>* raw_tde = nullptr) {
    MTK_REQUIRE(t_r.same_shape(t_tde), "cpmoe_forward: modality token shapes differ");
    const MatT<T> tg_r = expert_forward(p.shared, t_r);
    const MatT<T> tg_tde = expert_forward(p.shared, t_tde);
    const MatT<T> prompt_r = gated_mixture(p.common, route(p.router_common, t_r), t_r, raw_r);
    const MatT<T> prompt_tde =
        gated_mixture(p.common, route(p.router_common, t_tde), t_tde, raw_tde);
    const MatT<T> pr = add_rowvec(matmul(prompt_r, p.proj_r_w), p.proj_r_b);
    const MatT<T> pt = add_rowvec(matmul(prompt_tde, p.proj_tde_w), p.proj_tde_b);
    CpmoeOut<T> out;
    out.p_g = hadamard(pr, pt);
    out.hg_r = add(out.p_g, tg_r);
    out.hg_tde = add(out.p_g, tg_tde);
    return out;
}

template <typename T>
struct SamoeOut {
    MatT<T> hs_r, hs_tde;
    std::vector<T> crossmodal_logits;
};

template <typename T>
SamoeOut<T> samoe_forward(const MoeLayerT<T>& p, const MatT<T>& t_r, const MatT<T>& t_tde,
                          bool tde_present, std::vector<MatT<T>>* raw_r = nullptr,
                          std::vector<MatT<T>>* raw_tde = nullptr) {
    MTK_REQUIRE(t_r.same_shape(t_tde), "samoe_forward: modality token shapes differ");
    SamoeOut<T> out;
    out.hs_r = gated_mixture(p.spec_r, route(p.router_r, t_r), t_r, raw_r);
    if (tde_present) {
        out.hs_tde = gated_mixture(p.spec_tde, route(p.router_tde, t_tde), t_tde, raw_tde);
    } else {
        out.hs_tde = MatT<T>(t_tde.rows, t_tde.cols);
    }
    // token-mean router logits over both streams, consumed by the task loss
    const MatT<T> lg_r = add_rowvec(matmul(t_r, p.router_crossmodal.w), p.router_crossmodal.b);
    const MatT<T> lg_t = add_rowvec(matmul(t_tde, p.router_crossmodal.w), p.router_crossmodal.b);
    out.crossmodal_logits.assign(static_cast<size_t>(lg_r.cols), T(0));
    for (int j = 0; j < lg_r.cols; ++j) {
        T s = T(0);
        for (int i = 0; i < lg_r.rows; ++i) s += lg_r.at(i, j) + lg_t.at(i, j);
        out.crossmodal_logits[static_cast<size_t>(j)] = s / static_cast<T>(2 * lg_r.rows);
    }
    return out;
}

template <typename T>
MatT<T> layer_norm(const MatT<T>& x, const MatT<T>& gamma, const MatT<T>& beta) {
    constexpr double kEps = 1e-5;
    MatT<T> out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        T mean = T(0);
        for (int j = 0; j < x.cols; ++j) mean += x.at(i, j);
        mean /= static_cast<T>(x.cols);
        T var = T(0);
        for (int j = 0; j < x.cols; ++j) {
            const T c = x.at(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<T>(x.cols);
        const T sd = std::sqrt(var + static_cast<T>(kEps));
        for (int j = 0; j < x.cols; ++j)
            out.at(i, j) = (x.at(i, j) - mean) / sd * gamma.at(0, j) + beta.at(0, j);
    }
    return out;
}

/// Pre-norm multi-head self-attention block with residual.
template <typename T>
MatT<T> msa_forward(const MsaT<T>& p, const MatT<T>& x) {
    const MatT<T> y = layer_norm(x, p.ln_g, p.ln_b);
    const MatT<T> q = add_rowvec(matmul(y, p.wq), p.bq);
    const MatT<T> k = add_rowvec(matmul(y, p.wk), p.bk);
    const MatT<T> v = add_rowvec(matmul(y, p.wv), p.bv);
    const int c = x.cols;
    const int dh = c / p.heads;
    MTK_REQUIRE(dh * p.heads == c, "msa_forward: width not divisible by heads");
    MatT<T> mixed(x.rows, c);
    for (int h = 0; h < p.heads; ++h) {
        MatT<T> qh(x.rows, dh), kh(x.rows, dh), vh(x.rows, dh);
        for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < dh; ++j) {
                qh.at(i, j) = q.at(i, h * dh + j);
                kh.at(i, j) = k.at(i, h * dh + j);
                vh.at(i, j) = v.at(i, h * dh + j);
            }
        const MatT<T> oh = attention(qh, kh, vh);
        for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < dh; ++j) mixed.at(i, h * dh + j) = oh.at(i, j);
    }
    return add(x, add_rowvec(matmul(mixed, p.wo), p.bo));
}

/// One full layer: pre-norm MSA, then the mixture layer with its residual.
/// Returns the pair of per-modality outputs.
template <typename T>
std::pair<MatT<T>, MatT<T>> demoe_layer_forward(const MoeLayerT<T>& p, const MatT<T>& t_r,
                                                const MatT<T>& t_tde, bool tde_present = true) {
    const CpmoeOut<T> cp = cpmoe_forward(p, t_r, t_tde);
    const SamoeOut<T> sa = samoe_forward(p, t_r, t_tde, tde_present);
    return {add(add(cp.hg_r, sa.hs_r), t_r), add(add(cp.hg_tde, sa.hs_tde), t_tde)};
}

/// Row-major patch embedding of an H x W single-channel frame.
template <typename T>
MatT<T> patch_embed(const EncoderT<T>& enc, const MatT<T>& frame) {
    const int p = enc.patch;
    MTK_REQUIRE(frame.rows % p == 0 && frame.cols % p == 0,
                "patch_embed: frame size not divisible by patch size");
    const int gh = frame.rows / p;
    const int gw = frame.cols / p;
    MatT<T> flat(gh * gw, p * p);
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx)
            for (int py = 0; py < p; ++py)
                for (int px = 0; px < p; ++px)
                    flat.at(gy * gw + gx, py * p + px) = frame.at(gy * p + py, gx * p + px);
    return add_rowvec(matmul(flat, enc.patch_w), enc.patch_b);
}

template <typename T>
MatT<T> apply_mask_rows(const MatT<T>& x, const std::vector<int>& rows, const MatT<T>& token) {
    MatT<T> out = x;
    for (int r : rows) {
        MTK_REQUIRE(r >= 0 && r < x.rows, "apply_mask_rows: row out of range");
        for (int j = 0; j < x.cols; ++j) out.at(r, j) = token.at(0, j);
    }
    return out;
}

inline Mat to_f64_any(const Mat& m) { return m; }
inline Mat to_f64_any(const Mat32& m) { return to_f64(m); }

/// Full encoder pass over one frame pair. `tde_frame` may be null for
/// single-modality input: the auxiliary stream then carries a copy of the RGB
/// token grid and the specific TDE branch stays off. `records` (when given)
/// collects every per-layer tensor the loss functions need.
template <typename T>
MatT<T> encoder_forward(const EncoderT<T>& enc, const MatT<T>& frame_r,
                        const std::type_identity_t<MatT<T>>* frame_tde,
                        ForwardRecords* records = nullptr, const MaskPlan* mask = nullptr) {
    const bool tde_present = frame_tde != nullptr;
    if (tde_present)
        MTK_REQUIRE(frame_r.same_shape(*frame_tde),
                    "encoder_forward: modality frame shapes differ");
    MatT<T> x_r = patch_embed(enc, frame_r);
    MatT<T> x_tde = tde_present ? patch_embed(enc, *frame_tde) : x_r;
    if (records) records->layers.assign(enc.layers.size(), LayerRecord{});

    for (size_t l = 0; l < enc.layers.size(); ++l) {
        const EncoderLayerT<T>& layer = enc.layers[l];
        if (mask && l < mask->rows.size() && !mask->rows[l].empty()) {
            if (mask->modality == 0)
                x_r = apply_mask_rows(x_r, mask->rows[l], layer.moe.mask_token);
            else
                x_tde = apply_mask_rows(x_tde, mask->rows[l], layer.moe.mask_token);
        }
        LayerRecord* rec = records ? &records->layers[l] : nullptr;
        if (rec) {
            rec->input_r = to_f64_any(x_r);
            rec->input_tde = to_f64_any(x_tde);
        }
        const MatT<T> t_r = msa_forward(layer.msa, x_r);
        const MatT<T> t_tde = msa_forward(layer.msa, x_tde);

        std::vector<MatT<T>> craw_r, craw_tde, sraw_r, sraw_tde;
        const CpmoeOut<T> cp = cpmoe_forward(layer.moe, t_r, t_tde, rec ? &craw_r : nullptr,
                                             rec ? &craw_tde : nullptr);
        const SamoeOut<T> sa = samoe_forward(layer.moe, t_r, t_tde, tde_present,
                                             rec ? &sraw_r : nullptr, rec ? &sraw_tde : nullptr);
        x_r = add(add(cp.hg_r, sa.hs_r), t_r);
        x_tde = add(add(cp.hg_tde, sa.hs_tde), t_tde);
        if (rec) {
            rec->t_r = to_f64_any(t_r);
            rec->t_tde = to_f64_any(t_tde);
            rec->hg_r = to_f64_any(cp.hg_r);
            rec->hg_tde = to_f64_any(cp.hg_tde);
            rec->hs_r = to_f64_any(sa.hs_r);
            rec->hs_tde = to_f64_any(sa.hs_tde);
            rec->f_r = to_f64_any(x_r);
            rec->f_tde = to_f64_any(x_tde);
            for (auto& m : craw_r) rec->common_raw_r.push_back(to_f64_any(m));
            for (auto& m : craw_tde) rec->common_raw_tde.push_back(to_f64_any(m));
            for (auto& m : sraw_r) rec->spec_raw_r.push_back(to_f64_any(m));
            for (auto& m : sraw_tde) rec->spec_raw_tde.push_back(to_f64_any(m));
            rec->crossmodal_logits.assign(sa.crossmodal_logits.begin(),
                                          sa.crossmodal_logits.end());
        }
    }
    MatT<T> f_u = add(x_r, x_tde);
    check_finite(f_u, "encoder output");
    if (records) records->f_u = to_f64_any(f_u);
    return f_u;
}

/// Number of tokens produced for an H x W frame.
inline int token_count(int h, int w, int patch) {
    MTK_REQUIRE(patch > 0 && h % patch == 0 && w % patch == 0,
                "token_count: frame size not divisible by patch size");
    return (h / patch) * (w / patch);
}

EncoderParams init_encoder(int width, int depth, int patch, int heads, int n_common,
                           int n_specific, int k_active, Rng& rng);

/// Cast a double-precision parameter set to the float run mode.
EncoderT<float> to_f32(const EncoderParams& p);

} // namespace moetrack
