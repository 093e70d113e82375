#pragma once

// Reverse-mode autodiff over Eigen::MatrixXd in double precision. A Tape owns
// the computation graph of one forward pass; Vars are cheap handles into it.
// Every loss used in training is differentiable through these ops, and the
// gradients are validated against central finite differences in the tests.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace factline::nn {

using Mat = Eigen::MatrixXd;

class Tape;

struct Param {
    std::string name;
    Mat value;
    Mat grad;
    Mat m;  // Adam first moment
    Mat v;  // Adam second moment
};

struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Mat& val() const;
    int rows() const;
    int cols() const;
    bool valid() const { return tape != nullptr && id >= 0; }
};

class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Mat value);
    Var leaf(Param& p);  // gradient flows into p.grad after backward()

    // Runs reverse accumulation from a 1x1 loss node, then flushes gradients
    // of bound parameter leaves.
    void backward(const Var& loss);

    std::size_t size() const { return nodes_.size(); }

    // Graph construction internals, used by the op free functions.
    Var make(Mat value, std::function<void(Tape&, int)> back);
    const Mat& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    Mat& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

  private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void(Tape&, int)> back;  // (tape, own id)
    };
    std::vector<Node> nodes_;
    std::vector<std::pair<int, Param*>> bound_;
};

// Elementwise and structural ops
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var neg(Var a);
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var add_rowvec(Var a, Var v);
Var mul_rowvec(Var a, Var v);
Var gather_rows(Var a, std::vector<int> idx);
Var block(Var a, int r0, int c0, int nr, int nc);
Var vstack(const std::vector<Var>& parts);
Var hstack(const std::vector<Var>& parts);
Var relu(Var a);
Var tanh_v(Var a);
Var sigmoid(Var a);
Var softplus(Var a);

// Row-structured ops
Var softmax_rows(Var a);
Var masked_softmax_rows(Var a, const Mat& additive_mask);
Var log_softmax_rows(Var a);
Var layer_norm_rows(Var a, double eps = 1e-5);
Var l2_normalize_rows(Var a, double eps = 1e-12);
Var row_dot(Var a, Var b);
Var max_pool_rows(Var a, const std::vector<std::pair<int, int>>& ranges);

// Reductions and losses
Var sum_all(Var a);
Var mean_all(Var a);
Var pick_cols(Var a, std::vector<int> cols);
Var cross_entropy_mean(Var logits, const std::vector<int>& targets);
Var bce_with_logits_mean(Var logits, const Mat& targets01);

}  // namespace factline::nn
