#pragma once

#include <functional>
#include <vector>

#include "moetrack/mat.hpp"

namespace moetrack {

/// Reverse-accumulation tape over dense double matrices. Every operation
/// appends a node holding its value and a closure that scatters the node's
/// cotangent into its parents. backward() walks the tape once in reverse.
///
/// Handles are plain ints; a handle is only valid for the tape that issued it.
class Tape {
public:
    int leaf(Mat v, bool needs_grad = false);

    const Mat& val(int id) const { return nodes_[static_cast<size_t>(id)].val; }
    const Mat& grad(int id) const;
    bool has_grad(int id) const { return nodes_[static_cast<size_t>(id)].grad.size() != 0; }
    bool needs_grad(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
    size_t size() const { return nodes_.size(); }

    int matmul(int a, int b);
    int transpose(int a);
    int add(int a, int b);
    int sub(int a, int b);
    int hadamard(int a, int b);
    int divide(int a, int b);
    int scale(int a, double s);
    int add_const(int a, double s);
    int gelu(int a);
    int exp(int a);
    int log(int a);
    int sqrt(int a);
    int softmax_rows(int a);
    int row_sum(int a);                       // N x 1
    int sum_all(int a);                       // 1 x 1
    int col_slice(int a, int j0, int j1);     // columns [j0, j1)
    int concat_cols(const std::vector<int>& xs);
    int concat_rows(const std::vector<int>& xs);
    int gather_rows(int a, std::vector<int> idx);  // index -1 selects a zero row
    int element(int a, int i, int j);         // 1 x 1
    int clamp_min(int a, double lo);
    int stopgrad(int a);
    int reshape(int a, int r, int c);

    /// Seed d(out)/d(out) = 1 (out must be 1 x 1) and sweep the tape.
    void backward(int out);

private:
    struct Node {
        Mat val;
        Mat grad;  // allocated lazily during backward
        bool needs_grad = false;
        std::function<void(Tape&)> back;
    };

    int push(Mat v, bool needs_grad, std::function<void(Tape&)> back);
    void accumulate(int id, const Mat& g);
    Mat& grad_ref(int id) { return nodes_[static_cast<size_t>(id)].grad; }

    std::vector<Node> nodes_;
};

} // namespace moetrack
