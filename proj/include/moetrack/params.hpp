#pragma once

#include <string>
#include <vector>

#include "moetrack/moe.hpp"

namespace moetrack {

/// Named view into one parameter block. The registry is the single authority
/// for block naming and ordering: serialization, gradient checking and the
/// optimizer all walk it.
struct ParamRef {
    std::string name;
    Mat* mat = nullptr;
    bool frozen = false;
};

using ParamRegistry = std::vector<ParamRef>;

ParamRegistry collect_params(EncoderParams& enc);

inline void append_expert(ParamRegistry& reg, const std::string& prefix, Expert& e, bool frozen) {
    reg.push_back({prefix + ".w1", &e.w1, frozen});
    reg.push_back({prefix + ".b1", &e.b1, frozen});
    reg.push_back({prefix + ".w2", &e.w2, frozen});
    reg.push_back({prefix + ".b2", &e.b2, frozen});
}

inline void append_router(ParamRegistry& reg, const std::string& prefix, Router& r) {
    reg.push_back({prefix + ".w", &r.w, false});
    reg.push_back({prefix + ".b", &r.b, false});
}

inline ParamRegistry collect_params(EncoderParams& enc) {
    ParamRegistry reg;
    reg.push_back({"patch.w", &enc.patch_w, false});
    reg.push_back({"patch.b", &enc.patch_b, false});
    for (size_t l = 0; l < enc.layers.size(); ++l) {
        const std::string lp = "layer" + std::to_string(l);
        MsaParams& a = enc.layers[l].msa;
        reg.push_back({lp + ".msa.ln_g", &a.ln_g, false});
        reg.push_back({lp + ".msa.ln_b", &a.ln_b, false});
        reg.push_back({lp + ".msa.wq", &a.wq, false});
        reg.push_back({lp + ".msa.bq", &a.bq, false});
        reg.push_back({lp + ".msa.wk", &a.wk, false});
        reg.push_back({lp + ".msa.bk", &a.bk, false});
        reg.push_back({lp + ".msa.wv", &a.wv, false});
        reg.push_back({lp + ".msa.bv", &a.bv, false});
        reg.push_back({lp + ".msa.wo", &a.wo, false});
        reg.push_back({lp + ".msa.bo", &a.bo, false});
        MoeLayerParams& m = enc.layers[l].moe;
        append_expert(reg, lp + ".moe.shared", m.shared, /*frozen=*/true);
        for (size_t n = 0; n < m.common.size(); ++n)
            append_expert(reg, lp + ".moe.common" + std::to_string(n), m.common[n], false);
        for (size_t n = 0; n < m.spec_r.size(); ++n)
            append_expert(reg, lp + ".moe.spec_r" + std::to_string(n), m.spec_r[n], false);
        for (size_t n = 0; n < m.spec_tde.size(); ++n)
            append_expert(reg, lp + ".moe.spec_tde" + std::to_string(n), m.spec_tde[n], false);
        append_router(reg, lp + ".moe.router_common", m.router_common);
        append_router(reg, lp + ".moe.router_r", m.router_r);
        append_router(reg, lp + ".moe.router_tde", m.router_tde);
        append_router(reg, lp + ".moe.router_crossmodal", m.router_crossmodal);
        reg.push_back({lp + ".moe.proj_r.w", &m.proj_r_w, false});
        reg.push_back({lp + ".moe.proj_r.b", &m.proj_r_b, false});
        reg.push_back({lp + ".moe.proj_tde.w", &m.proj_tde_w, false});
        reg.push_back({lp + ".moe.proj_tde.b", &m.proj_tde_b, false});
        reg.push_back({lp + ".moe.mask_token", &m.mask_token, false});
    }
    return reg;
}

} // namespace moetrack
