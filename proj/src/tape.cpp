#include "moetrack/tape.hpp"

#include <cmath>

#include "moetrack/ops.hpp"

namespace moetrack {

int Tape::push(Mat v, bool needs_grad, std::function<void(Tape&)> back) {
    Node n;
    n.val = std::move(v);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Mat v, bool needs_grad) { return push(std::move(v), needs_grad, nullptr); }

const Mat& Tape::grad(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    MTK_REQUIRE(n.grad.rows == n.val.rows && n.grad.cols == n.val.cols,
                "grad: node has no accumulated gradient");
    return n.grad;
}

void Tape::accumulate(int id, const Mat& g) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) n.grad = Mat(n.val.rows, n.val.cols);
    for (size_t i = 0; i < g.size(); ++i) n.grad.d[i] += g.d[i];
}

int Tape::matmul(int a, int b) {
    Mat v = moetrack::matmul(val(a), val(b));
    const bool ng = needs_grad(a) || needs_grad(b);
    const int out = push(std::move(v), ng, nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        t.accumulate(a, moetrack::matmul(g, moetrack::transpose(t.val(b))));
        t.accumulate(b, moetrack::matmul(moetrack::transpose(t.val(a)), g));
    };
    return out;
}

int Tape::transpose(int a) {
    const int out = push(moetrack::transpose(val(a)), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        t.accumulate(a, moetrack::transpose(t.grad_ref(out)));
    };
    return out;
}

int Tape::add(int a, int b) {
    const int out = push(moetrack::add(val(a), val(b)), needs_grad(a) || needs_grad(b), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        t.accumulate(a, t.grad_ref(out));
        t.accumulate(b, t.grad_ref(out));
    };
    return out;
}

int Tape::sub(int a, int b) {
    const int out = push(moetrack::sub(val(a), val(b)), needs_grad(a) || needs_grad(b), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        t.accumulate(a, g);
        t.accumulate(b, moetrack::scale(g, -1.0));
    };
    return out;
}

int Tape::hadamard(int a, int b) {
    const int out =
        push(moetrack::hadamard(val(a), val(b)), needs_grad(a) || needs_grad(b), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        t.accumulate(a, moetrack::hadamard(g, t.val(b)));
        t.accumulate(b, moetrack::hadamard(g, t.val(a)));
    };
    return out;
}

int Tape::divide(int a, int b) {
    MTK_REQUIRE(val(a).same_shape(val(b)), "divide: shape mismatch");
    Mat v = val(a);
    for (size_t i = 0; i < v.size(); ++i) v.d[i] /= val(b).d[i];
    const int out = push(std::move(v), needs_grad(a) || needs_grad(b), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, b, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        const Mat& bv = t.val(b);
        const Mat& ov = t.val(out);
        Mat ga = g;
        Mat gb = g;
        for (size_t i = 0; i < g.size(); ++i) {
            ga.d[i] = g.d[i] / bv.d[i];
            gb.d[i] = -g.d[i] * ov.d[i] / bv.d[i];
        }
        t.accumulate(a, ga);
        t.accumulate(b, gb);
    };
    return out;
}

int Tape::scale(int a, double s) {
    const int out = push(moetrack::scale(val(a), s), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, s, out](Tape& t) {
        t.accumulate(a, moetrack::scale(t.grad_ref(out), s));
    };
    return out;
}

int Tape::add_const(int a, double s) {
    Mat v = val(a);
    for (double& x : v.d) x += s;
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        t.accumulate(a, t.grad_ref(out));
    };
    return out;
}

int Tape::gelu(int a) {
    const int out = push(gelu_mat(val(a)), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        const Mat& x = t.val(a);
        Mat gx = g;
        for (size_t i = 0; i < g.size(); ++i) gx.d[i] = g.d[i] * gelu_grad_scalar(x.d[i]);
        t.accumulate(a, gx);
    };
    return out;
}

int Tape::exp(int a) {
    Mat v = val(a);
    for (double& x : v.d) x = std::exp(x);
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        t.accumulate(a, moetrack::hadamard(t.grad_ref(out), t.val(out)));
    };
    return out;
}

int Tape::log(int a) {
    Mat v = val(a);
    for (double& x : v.d) {
        MTK_REQUIRE(x > 0.0, "log: non-positive input");
        x = std::log(x);
    }
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        Mat gx = g;
        for (size_t i = 0; i < g.size(); ++i) gx.d[i] = g.d[i] / t.val(a).d[i];
        t.accumulate(a, gx);
    };
    return out;
}

int Tape::sqrt(int a) {
    Mat v = val(a);
    for (double& x : v.d) {
        MTK_REQUIRE(x >= 0.0, "sqrt: negative input");
        x = std::sqrt(x);
    }
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        Mat gx = g;
        for (size_t i = 0; i < g.size(); ++i) gx.d[i] = 0.5 * g.d[i] / t.val(out).d[i];
        t.accumulate(a, gx);
    };
    return out;
}

int Tape::softmax_rows(int a) {
    const Mat& x = val(a);
    Mat v(x.rows, x.cols);
    std::vector<double> row(static_cast<size_t>(x.cols));
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) row[static_cast<size_t>(j)] = x.at(i, j);
        const std::vector<double> s = softmax(row);
        for (int j = 0; j < x.cols; ++j) v.at(i, j) = s[static_cast<size_t>(j)];
    }
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        const Mat& y = t.val(out);
        Mat gx(g.rows, g.cols);
        for (int i = 0; i < g.rows; ++i) {
            double dotgy = 0.0;
            for (int j = 0; j < g.cols; ++j) dotgy += g.at(i, j) * y.at(i, j);
            for (int j = 0; j < g.cols; ++j)
                gx.at(i, j) = y.at(i, j) * (g.at(i, j) - dotgy);
        }
        t.accumulate(a, gx);
    };
    return out;
}

int Tape::row_sum(int a) {
    const Mat& x = val(a);
    Mat v(x.rows, 1);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) v.at(i, 0) += x.at(i, j);
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        const Mat& x2 = t.val(a);
        Mat gx(x2.rows, x2.cols);
        for (int i = 0; i < x2.rows; ++i)
            for (int j = 0; j < x2.cols; ++j) gx.at(i, j) = g.at(i, 0);
        t.accumulate(a, gx);
    };
    return out;
}

int Tape::sum_all(int a) {
    double s = 0.0;
    for (double v : val(a).d) s += v;
    Mat v(1, 1);
    v.at(0, 0) = s;
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        const double g = t.grad_ref(out).at(0, 0);
        const Mat& x = t.val(a);
        t.accumulate(a, Mat(x.rows, x.cols, g));
    };
    return out;
}

int Tape::col_slice(int a, int j0, int j1) {
    const Mat& x = val(a);
    MTK_REQUIRE(0 <= j0 && j0 < j1 && j1 <= x.cols, "col_slice: bad range");
    Mat v(x.rows, j1 - j0);
    for (int i = 0; i < x.rows; ++i)
        for (int j = j0; j < j1; ++j) v.at(i, j - j0) = x.at(i, j);
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, j0, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        const Mat& x2 = t.val(a);
        Mat gx(x2.rows, x2.cols);
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) gx.at(i, j0 + j) = g.at(i, j);
        t.accumulate(a, gx);
    };
    return out;
}

int Tape::concat_cols(const std::vector<int>& xs) {
    MTK_REQUIRE(!xs.empty(), "concat_cols: empty list");
    int rows = val(xs[0]).rows;
    int cols = 0;
    bool ng = false;
    for (int id : xs) {
        MTK_REQUIRE(val(id).rows == rows, "concat_cols: row mismatch");
        cols += val(id).cols;
        ng = ng || needs_grad(id);
    }
    Mat v(rows, cols);
    int off = 0;
    for (int id : xs) {
        const Mat& x = val(id);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < x.cols; ++j) v.at(i, off + j) = x.at(i, j);
        off += x.cols;
    }
    const int out = push(std::move(v), ng, nullptr);
    nodes_[static_cast<size_t>(out)].back = [xs, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        int o = 0;
        for (int id : xs) {
            const Mat& x = t.val(id);
            Mat gx(x.rows, x.cols);
            for (int i = 0; i < x.rows; ++i)
                for (int j = 0; j < x.cols; ++j) gx.at(i, j) = g.at(i, o + j);
            t.accumulate(id, gx);
            o += x.cols;
        }
    };
    return out;
}

int Tape::concat_rows(const std::vector<int>& xs) {
    MTK_REQUIRE(!xs.empty(), "concat_rows: empty list");
    int cols = val(xs[0]).cols;
    int rows = 0;
    bool ng = false;
    for (int id : xs) {
        MTK_REQUIRE(val(id).cols == cols, "concat_rows: col mismatch");
        rows += val(id).rows;
        ng = ng || needs_grad(id);
    }
    Mat v(rows, cols);
    int off = 0;
    for (int id : xs) {
        const Mat& x = val(id);
        for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < cols; ++j) v.at(off + i, j) = x.at(i, j);
        off += x.rows;
    }
    const int out = push(std::move(v), ng, nullptr);
    nodes_[static_cast<size_t>(out)].back = [xs, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        int o = 0;
        for (int id : xs) {
            const Mat& x = t.val(id);
            Mat gx(x.rows, x.cols);
            for (int i = 0; i < x.rows; ++i)
                for (int j = 0; j < x.cols; ++j) gx.at(i, j) = g.at(o + i, j);
            t.accumulate(id, gx);
            o += x.rows;
        }
    };
    return out;
}

int Tape::gather_rows(int a, std::vector<int> idx) {
    const Mat& x = val(a);
    Mat v(static_cast<int>(idx.size()), x.cols);
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0) continue;
        MTK_REQUIRE(idx[i] < x.rows, "gather_rows: index out of range");
        for (int j = 0; j < x.cols; ++j) v.at(static_cast<int>(i), j) = x.at(idx[i], j);
    }
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, idx = std::move(idx), out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        const Mat& x2 = t.val(a);
        Mat gx(x2.rows, x2.cols);
        for (size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] < 0) continue;
            for (int j = 0; j < x2.cols; ++j) gx.at(idx[i], j) += g.at(static_cast<int>(i), j);
        }
        t.accumulate(a, gx);
    };
    return out;
}

int Tape::element(int a, int i, int j) {
    const Mat& x = val(a);
    MTK_REQUIRE(i >= 0 && i < x.rows && j >= 0 && j < x.cols, "element: index out of range");
    Mat v(1, 1);
    v.at(0, 0) = x.at(i, j);
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, i, j, out](Tape& t) {
        const Mat& x2 = t.val(a);
        Mat gx(x2.rows, x2.cols);
        gx.at(i, j) = t.grad_ref(out).at(0, 0);
        t.accumulate(a, gx);
    };
    return out;
}

int Tape::clamp_min(int a, double lo) {
    Mat v = val(a);
    for (double& x : v.d) x = std::max(x, lo);
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, lo, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        const Mat& x = t.val(a);
        Mat gx(g.rows, g.cols);
        for (size_t i = 0; i < g.size(); ++i) gx.d[i] = x.d[i] > lo ? g.d[i] : 0.0;
        t.accumulate(a, gx);
    };
    return out;
}

int Tape::stopgrad(int a) { return push(val(a), false, nullptr); }

int Tape::reshape(int a, int r, int c) {
    const Mat& x = val(a);
    MTK_REQUIRE(static_cast<size_t>(r) * c == x.size(), "reshape: element count mismatch");
    Mat v(r, c);
    v.d = x.d;
    const int out = push(std::move(v), needs_grad(a), nullptr);
    nodes_[static_cast<size_t>(out)].back = [a, out](Tape& t) {
        const Mat& g = t.grad_ref(out);
        const Mat& x2 = t.val(a);
        Mat gx(x2.rows, x2.cols);
        gx.d = g.d;
        t.accumulate(a, gx);
    };
    return out;
}

void Tape::backward(int out) {
    Node& top = nodes_[static_cast<size_t>(out)];
    MTK_REQUIRE(top.val.rows == 1 && top.val.cols == 1, "backward: output must be scalar");
    MTK_REQUIRE(top.needs_grad, "backward: output does not depend on any gradient leaf");
    top.grad = Mat(1, 1, 1.0);
    for (int id = out; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.back || n.grad.size() == 0) continue;
        n.back(*this);
    }
}

} // namespace moetrack
