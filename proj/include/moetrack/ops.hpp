#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "moetrack/mat.hpp"

namespace moetrack {

/// Sparse gate produced by a router for one token: exactly min(k, expert_count)
/// active experts, weights renormalized over the active set.
template <typename T>
struct GateVecT {
    int expert_count = 0;
    std::vector<int> active;   // ascending indices
    std::vector<T> weights;    // aligned with `active`, sums to 1

    T weight_of(int expert) const {
        for (size_t i = 0; i < active.size(); ++i)
            if (active[i] == expert) return weights[i];
        return T(0);
    }
};

using GateVector = GateVecT<double>;

/// Numerically stable softmax (max subtraction).
template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
    MTK_REQUIRE(!logits.empty(), "softmax: empty input");
    for (T v : logits)
        MTK_REQUIRE(std::isfinite(static_cast<double>(v)), "softmax: non-finite logit");
    const T mx = *std::max_element(logits.begin(), logits.end());
    std::vector<T> out(logits.size());
    T sum = T(0);
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (T& v : out) v /= sum;
    return out;
}

/// Exact GELU, x * Phi(x) with the Gaussian CDF via erf. The tanh
/// approximation is deliberately not used.
template <typename T>
T gelu_scalar(T x) {
    const double xd = static_cast<double>(x);
    return static_cast<T>(xd * 0.5 * (1.0 + std::erf(xd * 0.7071067811865475244)));
}

/// d/dx gelu = Phi(x) + x * phi(x)
inline double gelu_grad_scalar(double x) {
    const double phi = std::exp(-0.5 * x * x) * 0.3989422804014326779;
    const double Phi = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
    return Phi + x * phi;
}

template <typename T>
std::vector<T> gelu(const std::vector<T>& x) {
    std::vector<T> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        MTK_REQUIRE(std::isfinite(static_cast<double>(x[i])), "gelu: non-finite input");
        out[i] = gelu_scalar(x[i]);
    }
    return out;
}

template <typename T>
MatT<T> gelu_mat(const MatT<T>& x) {
    MatT<T> out = x;
    for (T& v : out.d) v = gelu_scalar(v);
    return out;
}

/// Indices of the k largest scores; ties resolved toward the lowest index.
template <typename T>
std::vector<int> top_k_select(const std::vector<T>& scores, int k) {
    MTK_REQUIRE(k >= 1 && static_cast<size_t>(k) <= scores.size(), "top_k_select: k out of range");
    std::vector<int> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
    std::vector<int> out(idx.begin(), idx.begin() + k);
    std::sort(out.begin(), out.end());
    return out;
}

template <typename T>
T dot(const std::vector<T>& u, const std::vector<T>& v) {
    MTK_REQUIRE(u.size() == v.size(), "dot: length mismatch");
    T s = T(0);
    for (size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

template <typename T>
T norm2(const std::vector<T>& u) {
    return std::sqrt(dot(u, u));
}

template <typename T>
T cosine(const std::vector<T>& u, const std::vector<T>& v) {
    const T nu = norm2(u);
    const T nv = norm2(v);
    MTK_REQUIRE(nu > T(0) && nv > T(0), "cosine: zero-norm input");
    T c = dot(u, v) / (nu * nv);
    return std::clamp(c, T(-1), T(1));
}

template <typename T>
T mse(const MatT<T>& a, const MatT<T>& b) {
    MTK_REQUIRE(a.same_shape(b), "mse: shape mismatch");
    MTK_REQUIRE(a.size() > 0, "mse: empty matrices");
    T s = T(0);
    for (size_t i = 0; i < a.size(); ++i) {
        const T diff = a.d[i] - b.d[i];
        s += diff * diff;
    }
    return s / static_cast<T>(a.size());
}

/// Scaled dot-product attention, softmax(Q Kt / sqrt(d)) V with per-row softmax.
template <typename T>
MatT<T> attention(const MatT<T>& q, const MatT<T>& k, const MatT<T>& v) {
    MTK_REQUIRE(q.cols == k.cols, "attention: Q/K width mismatch");
    MTK_REQUIRE(k.rows == v.rows, "attention: K/V row mismatch");
    const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(q.cols));
    MatT<T> out(q.rows, v.cols);
    std::vector<T> logits(static_cast<size_t>(k.rows));
    for (int i = 0; i < q.rows; ++i) {
        for (int r = 0; r < k.rows; ++r) {
            T s = T(0);
            for (int c = 0; c < q.cols; ++c) s += q.at(i, c) * k.at(r, c);
            logits[static_cast<size_t>(r)] = s * inv_sqrt_d;
        }
        const std::vector<T> w = softmax(logits);
        for (int r = 0; r < k.rows; ++r)
            for (int c = 0; c < v.cols; ++c) out.at(i, c) += w[static_cast<size_t>(r)] * v.at(r, c);
    }
    check_finite(out, "attention output");
    return out;
}

/// Softmax over all logits, keep top-k, renormalize the kept weights.
template <typename T>
GateVecT<T> sparse_gate(const std::vector<T>& logits, int k_active) {
    const int e = static_cast<int>(logits.size());
    const int k = std::min(k_active, e);
    MTK_REQUIRE(k >= 1, "sparse_gate: need at least one active expert");
    const std::vector<T> probs = softmax(logits);
    GateVecT<T> g;
    g.expert_count = e;
    g.active = top_k_select(probs, k);
    g.weights.resize(g.active.size());
    T sum = T(0);
    for (size_t i = 0; i < g.active.size(); ++i) sum += probs[static_cast<size_t>(g.active[i])];
    for (size_t i = 0; i < g.active.size(); ++i)
        g.weights[i] = probs[static_cast<size_t>(g.active[i])] / sum;
    return g;
}

template <typename T>
std::vector<T> l2_normalize(const std::vector<T>& v) {
    const T n = norm2(v);
    MTK_REQUIRE(n > T(0), "l2_normalize: zero vector");
    std::vector<T> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

} // namespace moetrack
