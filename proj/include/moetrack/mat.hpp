#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "moetrack/error.hpp"

namespace moetrack {

/// Dense row-major matrix. The whole pipeline runs on doubles; the float
/// instantiation backs the 32-bit encoder run mode.
template <typename T>
struct MatT {
    int rows = 0;
    int cols = 0;
    std::vector<T> d;

    MatT() = default;
    MatT(int r, int c, T fill = T(0)) : rows(r), cols(c), d(static_cast<size_t>(r) * c, fill) {
        MTK_REQUIRE(r >= 0 && c >= 0, "matrix dims must be nonnegative");
    }

    static MatT identity(int n) {
        MatT m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = T(1);
        return m;
    }

    T& at(int i, int j) { return d[static_cast<size_t>(i) * cols + j]; }
    const T& at(int i, int j) const { return d[static_cast<size_t>(i) * cols + j]; }

    size_t size() const { return d.size(); }
    bool same_shape(const MatT& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (T v : d)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

using Mat = MatT<double>;
using Mat32 = MatT<float>;

template <typename T>
void check_finite(const MatT<T>& m, const char* what) {
    MTK_REQUIRE(m.all_finite(), std::string("non-finite values in ") + what);
}

template <typename T>
MatT<T> matmul(const MatT<T>& a, const MatT<T>& b) {
    MTK_REQUIRE(a.cols == b.rows, "matmul: inner dims mismatch");
    MatT<T> out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const T aik = a.at(i, k);
            if (aik == T(0)) continue;
            const T* brow = &b.d[static_cast<size_t>(k) * b.cols];
            T* orow = &out.d[static_cast<size_t>(i) * out.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

template <typename T>
MatT<T> transpose(const MatT<T>& a) {
    MatT<T> out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

template <typename T>
MatT<T> add(const MatT<T>& a, const MatT<T>& b) {
    MTK_REQUIRE(a.same_shape(b), "add: shape mismatch");
    MatT<T> out = a;
    for (size_t i = 0; i < out.size(); ++i) out.d[i] += b.d[i];
    return out;
}

template <typename T>
MatT<T> sub(const MatT<T>& a, const MatT<T>& b) {
    MTK_REQUIRE(a.same_shape(b), "sub: shape mismatch");
    MatT<T> out = a;
    for (size_t i = 0; i < out.size(); ++i) out.d[i] -= b.d[i];
    return out;
}

template <typename T>
MatT<T> hadamard(const MatT<T>& a, const MatT<T>& b) {
    MTK_REQUIRE(a.same_shape(b), "hadamard: shape mismatch");
    MatT<T> out = a;
    for (size_t i = 0; i < out.size(); ++i) out.d[i] *= b.d[i];
    return out;
}

template <typename T>
MatT<T> scale(const MatT<T>& a, T s) {
    MatT<T> out = a;
    for (T& v : out.d) v *= s;
    return out;
}

/// out[i][j] = a[i][j] + v[0][j]  (v is 1 x cols)
template <typename T>
MatT<T> add_rowvec(const MatT<T>& a, const MatT<T>& v) {
    MTK_REQUIRE(v.rows == 1 && v.cols == a.cols, "add_rowvec: bias shape mismatch");
    MatT<T> out = a;
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out.at(i, j) += v.at(0, j);
    return out;
}

template <typename T>
MatT<T> cast_mat(const Mat& a) {
    MatT<T> out(a.rows, a.cols);
    for (size_t i = 0; i < a.size(); ++i) out.d[i] = static_cast<T>(a.d[i]);
    return out;
}

inline Mat to_f64(const Mat32& a) {
    Mat out(a.rows, a.cols);
    for (size_t i = 0; i < a.size(); ++i) out.d[i] = static_cast<double>(a.d[i]);
    return out;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
    MTK_REQUIRE(a.same_shape(b), "max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.d[i] - b.d[i]));
    return m;
}

} // namespace moetrack
