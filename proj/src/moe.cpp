#include "moetrack/moe.hpp"

namespace moetrack {

namespace {

Mat randn(int r, int c, double sigma, Rng& rng) {
    Mat m(r, c);
    for (double& v : m.d) v = rng.normal(0.0, sigma);
    return m;
}

Expert init_expert(int c, int k, Rng& rng) {
    Expert e;
    e.w1 = randn(c, k, 1.0 / std::sqrt(static_cast<double>(c)), rng);
    e.b1 = Mat(1, k);
    e.w2 = randn(k, c, 1.0 / std::sqrt(static_cast<double>(k)), rng);
    e.b2 = Mat(1, c);
    return e;
}

Router init_router(int c, int e, int k_active, Rng& rng) {
    Router r;
    r.w = randn(c, e, 1.0 / std::sqrt(static_cast<double>(c)), rng);
    r.b = Mat(1, e);
    r.k_active = k_active;
    return r;
}

template <typename T>
ExpertT<T> cast_expert(const Expert& e) {
    return {cast_mat<T>(e.w1), cast_mat<T>(e.b1), cast_mat<T>(e.w2), cast_mat<T>(e.b2)};
}

template <typename T>
RouterT<T> cast_router(const Router& r) {
    return {cast_mat<T>(r.w), cast_mat<T>(r.b), r.k_active};
}

} // namespace

EncoderParams init_encoder(int width, int depth, int patch, int heads, int n_common,
                           int n_specific, int k_active, Rng& rng) {
    MTK_CONFIG_REQUIRE(width >= 8, "encoder.width must be >= 8 (expert latent width is width/8)");
    MTK_CONFIG_REQUIRE(depth >= 0, "encoder.depth must be >= 0");
    MTK_CONFIG_REQUIRE(patch >= 1, "encoder.patch must be >= 1");
    MTK_CONFIG_REQUIRE(heads >= 1 && width % heads == 0,
                       "encoder.heads must divide encoder.width");
    MTK_CONFIG_REQUIRE(n_common >= 1 && n_specific >= 1, "expert counts must be >= 1");
    MTK_CONFIG_REQUIRE(k_active >= 1 && k_active <= n_common && k_active <= n_specific,
                       "encoder.k_active must be in [1, expert count]");

    const int k = width / 8;
    EncoderParams enc;
    enc.width = width;
    enc.depth = depth;
    enc.patch = patch;
    enc.heads = heads;
    enc.n_common = n_common;
    enc.n_specific = n_specific;
    enc.k_active = k_active;
    enc.patch_w = randn(patch * patch, width, 1.0 / patch, rng);
    enc.patch_b = Mat(1, width);
    enc.layers.resize(static_cast<size_t>(depth));
    const double ws = 1.0 / std::sqrt(static_cast<double>(width));
    for (auto& layer : enc.layers) {
        MsaParams& a = layer.msa;
        a.heads = heads;
        a.ln_g = Mat(1, width, 1.0);
        a.ln_b = Mat(1, width);
        a.wq = randn(width, width, ws, rng);
        a.bq = Mat(1, width);
        a.wk = randn(width, width, ws, rng);
        a.bk = Mat(1, width);
        a.wv = randn(width, width, ws, rng);
        a.bv = Mat(1, width);
        a.wo = randn(width, width, ws, rng);
        a.bo = Mat(1, width);

        MoeLayerParams& m = layer.moe;
        m.shared = init_expert(width, k, rng);
        for (int n = 0; n < n_common; ++n) m.common.push_back(init_expert(width, k, rng));
        for (int n = 0; n < n_specific; ++n) m.spec_r.push_back(init_expert(width, k, rng));
        for (int n = 0; n < n_specific; ++n) m.spec_tde.push_back(init_expert(width, k, rng));
        m.router_common = init_router(width, n_common, k_active, rng);
        m.router_r = init_router(width, n_specific, k_active, rng);
        m.router_tde = init_router(width, n_specific, k_active, rng);
        m.router_crossmodal = init_router(width, kModalityClasses, kModalityClasses, rng);
        m.proj_r_w = Mat::identity(width);
        m.proj_r_b = Mat(1, width);
        m.proj_tde_w = Mat::identity(width);
        m.proj_tde_b = Mat(1, width);
        m.mask_token = randn(1, width, 0.02, rng);
    }
    return enc;
}

EncoderT<float> to_f32(const EncoderParams& p) {
    EncoderT<float> out;
    out.width = p.width;
    out.depth = p.depth;
    out.patch = p.patch;
    out.heads = p.heads;
    out.n_common = p.n_common;
    out.n_specific = p.n_specific;
    out.k_active = p.k_active;
    out.patch_w = cast_mat<float>(p.patch_w);
    out.patch_b = cast_mat<float>(p.patch_b);
    for (const auto& layer : p.layers) {
        EncoderLayerT<float> l;
        l.msa = {cast_mat<float>(layer.msa.ln_g), cast_mat<float>(layer.msa.ln_b),
                 cast_mat<float>(layer.msa.wq),   cast_mat<float>(layer.msa.bq),
                 cast_mat<float>(layer.msa.wk),   cast_mat<float>(layer.msa.bk),
                 cast_mat<float>(layer.msa.wv),   cast_mat<float>(layer.msa.bv),
                 cast_mat<float>(layer.msa.wo),   cast_mat<float>(layer.msa.bo),
                 layer.msa.heads};
        l.moe.shared = cast_expert<float>(layer.moe.shared);
        for (const auto& e : layer.moe.common) l.moe.common.push_back(cast_expert<float>(e));
        for (const auto& e : layer.moe.spec_r) l.moe.spec_r.push_back(cast_expert<float>(e));
        for (const auto& e : layer.moe.spec_tde) l.moe.spec_tde.push_back(cast_expert<float>(e));
        l.moe.router_common = cast_router<float>(layer.moe.router_common);
        l.moe.router_r = cast_router<float>(layer.moe.router_r);
        l.moe.router_tde = cast_router<float>(layer.moe.router_tde);
        l.moe.router_crossmodal = cast_router<float>(layer.moe.router_crossmodal);
        l.moe.proj_r_w = cast_mat<float>(layer.moe.proj_r_w);
        l.moe.proj_r_b = cast_mat<float>(layer.moe.proj_r_b);
        l.moe.proj_tde_w = cast_mat<float>(layer.moe.proj_tde_w);
        l.moe.proj_tde_b = cast_mat<float>(layer.moe.proj_tde_b);
        l.moe.mask_token = cast_mat<float>(layer.moe.mask_token);
        out.layers.push_back(std::move(l));
    }
    return out;
}

} // namespace moetrack
