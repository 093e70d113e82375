#include "factline/nn/autograd.hpp"

#include <cmath>

#include "factline/common.hpp"

namespace factline::nn {

namespace {
void check_same_tape(const Var& a, const Var& b) {
    if (a.tape != b.tape) throw ContractError("vars belong to different tapes");
}
}  // namespace

const Mat& Var::val() const { return tape->val(id); }
int Var::rows() const { return static_cast<int>(val().rows()); }
int Var::cols() const { return static_cast<int>(val().cols()); }

Var Tape::constant(Mat value) { return make(std::move(value), nullptr); }

Var Tape::leaf(Param& p) {
    Var v = make(p.value, nullptr);
    bound_.emplace_back(v.id, &p);
    return v;
}

Var Tape::make(Mat value, std::function<void(Tape&, int)> back) {
    Node n;
    n.value = std::move(value);
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(const Var& loss) {
    if (loss.tape != this) throw ContractError("backward: loss from another tape");
    if (loss.rows() != 1 || loss.cols() != 1) throw ContractError("backward: loss must be 1x1");
    grad(loss.id)(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        auto& node = nodes_[static_cast<std::size_t>(i)];
        if (node.back) node.back(*this, i);
    }
    for (const auto& [id, p] : bound_) {
        if (p->grad.size() == 0) p->grad = Mat::Zero(p->value.rows(), p->value.cols());
        p->grad += grad(id);
    }
}

Var add(Var a, Var b) {
    check_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("add: shape mismatch");
    const int ai = a.id, bi = b.id;
    return a.tape->make(a.val() + b.val(), [ai, bi](Tape& t, int out) {
        t.grad(ai) += t.grad(out);
        t.grad(bi) += t.grad(out);
    });
}

Var sub(Var a, Var b) {
    check_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("sub: shape mismatch");
    const int ai = a.id, bi = b.id;
    return a.tape->make(a.val() - b.val(), [ai, bi](Tape& t, int out) {
        t.grad(ai) += t.grad(out);
        t.grad(bi) -= t.grad(out);
    });
}

Var mul(Var a, Var b) {
    check_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("mul: shape mismatch");
    const int ai = a.id, bi = b.id;
    return a.tape->make(a.val().cwiseProduct(b.val()), [ai, bi](Tape& t, int out) {
        t.grad(ai) += t.grad(out).cwiseProduct(t.val(bi));
        t.grad(bi) += t.grad(out).cwiseProduct(t.val(ai));
    });
}

Var scale(Var a, double s) {
    const int ai = a.id;
    return a.tape->make(a.val() * s,
                        [ai, s](Tape& t, int out) { t.grad(ai) += t.grad(out) * s; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var matmul(Var a, Var b) {
    check_same_tape(a, b);
    if (a.cols() != b.rows()) throw ContractError("matmul: inner dims differ");
    const int ai = a.id, bi = b.id;
    return a.tape->make(a.val() * b.val(), [ai, bi](Tape& t, int out) {
        t.grad(ai).noalias() += t.grad(out) * t.val(bi).transpose();
        t.grad(bi).noalias() += t.val(ai).transpose() * t.grad(out);
    });
}

Var matmul_nt(Var a, Var b) {
    check_same_tape(a, b);
    if (a.cols() != b.cols()) throw ContractError("matmul_nt: inner dims differ");
    const int ai = a.id, bi = b.id;
    return a.tape->make(a.val() * b.val().transpose(), [ai, bi](Tape& t, int out) {
        t.grad(ai).noalias() += t.grad(out) * t.val(bi);
        t.grad(bi).noalias() += t.grad(out).transpose() * t.val(ai);
    });
}

Var add_rowvec(Var a, Var v) {
    check_same_tape(a, v);
    if (v.rows() != 1 || v.cols() != a.cols()) throw ContractError("add_rowvec: bad vector shape");
    const int ai = a.id, vi = v.id;
    return a.tape->make(a.val().rowwise() + v.val().row(0), [ai, vi](Tape& t, int out) {
        t.grad(ai) += t.grad(out);
        t.grad(vi).row(0) += t.grad(out).colwise().sum();
    });
}

Var mul_rowvec(Var a, Var v) {
    check_same_tape(a, v);
    if (v.rows() != 1 || v.cols() != a.cols()) throw ContractError("mul_rowvec: bad vector shape");
    const int ai = a.id, vi = v.id;
    Mat out = a.val().array().rowwise() * v.val().row(0).array();
    return a.tape->make(std::move(out), [ai, vi](Tape& t, int o) {
        t.grad(ai).array() += t.grad(o).array().rowwise() * t.val(vi).row(0).array();
        t.grad(vi).row(0).array() +=
            (t.grad(o).array() * t.val(ai).array()).colwise().sum();
    });
}

Var gather_rows(Var a, std::vector<int> idx) {
    const int ai = a.id;
    Mat out(static_cast<Eigen::Index>(idx.size()), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= a.rows()) throw ContractError("gather_rows: index out of range");
        out.row(static_cast<Eigen::Index>(i)) = a.val().row(idx[i]);
    }
    return a.tape->make(std::move(out), [ai, idx = std::move(idx)](Tape& t, int o) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
            t.grad(ai).row(idx[i]) += t.grad(o).row(static_cast<Eigen::Index>(i));
        }
    });
}

Var block(Var a, int r0, int c0, int nr, int nc) {
    if (r0 < 0 || c0 < 0 || r0 + nr > a.rows() || c0 + nc > a.cols()) {
        throw ContractError("block: out of range");
    }
    const int ai = a.id;
    return a.tape->make(a.val().block(r0, c0, nr, nc), [ai, r0, c0, nr, nc](Tape& t, int o) {
        t.grad(ai).block(r0, c0, nr, nc) += t.grad(o);
    });
}

Var vstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("vstack: empty");
    Tape* tape = parts[0].tape;
    int total = 0;
    const int cols = parts[0].cols();
    for (const auto& p : parts) {
        if (p.tape != tape || p.cols() != cols) throw ContractError("vstack: mismatched parts");
        total += p.rows();
    }
    Mat out(total, cols);
    std::vector<int> ids, offsets;
    int r = 0;
    for (const auto& p : parts) {
        out.middleRows(r, p.rows()) = p.val();
        ids.push_back(p.id);
        offsets.push_back(r);
        r += p.rows();
    }
    return tape->make(std::move(out), [ids, offsets](Tape& t, int o) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto rows = t.val(ids[i]).rows();
            t.grad(ids[i]) += t.grad(o).middleRows(offsets[i], rows);
        }
    });
}

Var hstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("hstack: empty");
    Tape* tape = parts[0].tape;
    int total = 0;
    const int rows = parts[0].rows();
    for (const auto& p : parts) {
        if (p.tape != tape || p.rows() != rows) throw ContractError("hstack: mismatched parts");
        total += p.cols();
    }
    Mat out(rows, total);
    std::vector<int> ids, offsets;
    int c = 0;
    for (const auto& p : parts) {
        out.middleCols(c, p.cols()) = p.val();
        ids.push_back(p.id);
        offsets.push_back(c);
        c += p.cols();
    }
    return tape->make(std::move(out), [ids, offsets](Tape& t, int o) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto cols = t.val(ids[i]).cols();
            t.grad(ids[i]) += t.grad(o).middleCols(offsets[i], cols);
        }
    });
}

Var relu(Var a) {
    const int ai = a.id;
    return a.tape->make(a.val().cwiseMax(0.0), [ai](Tape& t, int o) {
        t.grad(ai).array() +=
            t.grad(o).array() * (t.val(ai).array() > 0.0).cast<double>();
    });
}

Var tanh_v(Var a) {
    const int ai = a.id;
    return a.tape->make(a.val().array().tanh().matrix(), [ai](Tape& t, int o) {
        t.grad(ai).array() += t.grad(o).array() * (1.0 - t.val(o).array().square());
    });
}

Var sigmoid(Var a) {
    const int ai = a.id;
    Mat out = (1.0 / (1.0 + (-a.val().array()).exp())).matrix();
    return a.tape->make(std::move(out), [ai](Tape& t, int o) {
        t.grad(ai).array() += t.grad(o).array() * t.val(o).array() * (1.0 - t.val(o).array());
    });
}

Var softplus(Var a) {
    const int ai = a.id;
    // log(1+exp(x)) = max(x,0) + log1p(exp(-|x|)), stable both ways
    Mat out = a.val().array().max(0.0) + (-a.val().array().abs()).exp().log1p();
    return a.tape->make(std::move(out), [ai](Tape& t, int o) {
        t.grad(ai).array() +=
            t.grad(o).array() / (1.0 + (-t.val(ai).array()).exp());
    });
}

Var softmax_rows(Var a) {
    const int ai = a.id;
    Mat out = a.val();
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double mx = out.row(r).maxCoeff();
        out.row(r) = (out.row(r).array() - mx).exp();
        out.row(r) /= out.row(r).sum();
    }
    return a.tape->make(std::move(out), [ai](Tape& t, int o) {
        const Mat& y = t.val(o);
        const Mat& dy = t.grad(o);
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            const double dot = y.row(r).dot(dy.row(r));
            t.grad(ai).row(r).array() += y.row(r).array() * (dy.row(r).array() - dot);
        }
    });
}

Var masked_softmax_rows(Var a, const Mat& additive_mask) {
    if (additive_mask.rows() != a.rows() || additive_mask.cols() != a.cols()) {
        throw ContractError("masked_softmax_rows: mask shape mismatch");
    }
    Var shifted = add(a, a.tape->constant(additive_mask));
    return softmax_rows(shifted);
}

Var log_softmax_rows(Var a) {
    const int ai = a.id;
    Mat out = a.val();
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double mx = out.row(r).maxCoeff();
        const double lse = mx + std::log((out.row(r).array() - mx).exp().sum());
        out.row(r).array() -= lse;
    }
    return a.tape->make(std::move(out), [ai](Tape& t, int o) {
        const Mat& y = t.val(o);
        const Mat& dy = t.grad(o);
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            const double total = dy.row(r).sum();
            t.grad(ai).row(r).array() += dy.row(r).array() - y.row(r).array().exp() * total;
        }
    });
}

Var layer_norm_rows(Var a, double eps) {
    const int ai = a.id;
    const auto n = static_cast<double>(a.cols());
    Mat out(a.rows(), a.cols());
    Eigen::VectorXd inv_std(a.rows());
    for (Eigen::Index r = 0; r < a.val().rows(); ++r) {
        const double mean = a.val().row(r).mean();
        const double var = (a.val().row(r).array() - mean).square().sum() / n;
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        out.row(r) = (a.val().row(r).array() - mean) * inv_std(r);
    }
    return a.tape->make(std::move(out), [ai, inv_std = std::move(inv_std), n](Tape& t, int o) {
        const Mat& xhat = t.val(o);
        const Mat& dy = t.grad(o);
        for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
            const double mean_dy = dy.row(r).mean();
            const double mean_dy_xhat = (dy.row(r).array() * xhat.row(r).array()).sum() / n;
            t.grad(ai).row(r).array() +=
                inv_std(r) *
                (dy.row(r).array() - mean_dy - xhat.row(r).array() * mean_dy_xhat);
        }
    });
}

Var l2_normalize_rows(Var a, double eps) {
    const int ai = a.id;
    Mat out(a.rows(), a.cols());
    Eigen::VectorXd scales(a.rows());
    for (Eigen::Index r = 0; r < a.val().rows(); ++r) {
        const double norm = std::max(a.val().row(r).norm(), eps);
        scales(r) = 1.0 / norm;
        out.row(r) = a.val().row(r) * scales(r);
    }
    return a.tape->make(std::move(out), [ai, scales = std::move(scales)](Tape& t, int o) {
        const Mat& y = t.val(o);
        const Mat& dy = t.grad(o);
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            const double dot = y.row(r).dot(dy.row(r));
            t.grad(ai).row(r).array() +=
                scales(r) * (dy.row(r).array() - y.row(r).array() * dot);
        }
    });
}

Var row_dot(Var a, Var b) {
    check_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("row_dot: shape mismatch");
    const int ai = a.id, bi = b.id;
    Mat out(a.rows(), 1);
    for (Eigen::Index r = 0; r < a.val().rows(); ++r) out(r, 0) = a.val().row(r).dot(b.val().row(r));
    return a.tape->make(std::move(out), [ai, bi](Tape& t, int o) {
        for (Eigen::Index r = 0; r < t.val(o).rows(); ++r) {
            const double g = t.grad(o)(r, 0);
            t.grad(ai).row(r) += g * t.val(bi).row(r);
            t.grad(bi).row(r) += g * t.val(ai).row(r);
        }
    });
}

Var max_pool_rows(Var a, const std::vector<std::pair<int, int>>& ranges) {
    const int ai = a.id;
    Mat out(static_cast<Eigen::Index>(ranges.size()), a.cols());
    std::vector<std::vector<int>> argmax(ranges.size(), std::vector<int>(static_cast<std::size_t>(a.cols())));
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto [r0, len] = ranges[i];
        if (len <= 0 || r0 < 0 || r0 + len > a.rows()) throw ContractError("max_pool_rows: bad range");
        for (int c = 0; c < a.cols(); ++c) {
            int best = r0;
            for (int r = r0 + 1; r < r0 + len; ++r) {
                if (a.val()(r, c) > a.val()(best, c)) best = r;
            }
            out(static_cast<Eigen::Index>(i), c) = a.val()(best, c);
            argmax[i][static_cast<std::size_t>(c)] = best;
        }
    }
    return a.tape->make(std::move(out), [ai, argmax = std::move(argmax)](Tape& t, int o) {
        for (std::size_t i = 0; i < argmax.size(); ++i) {
            for (int c = 0; c < t.val(o).cols(); ++c) {
                t.grad(ai)(argmax[i][static_cast<std::size_t>(c)], c) +=
                    t.grad(o)(static_cast<Eigen::Index>(i), c);
            }
        }
    });
}

Var sum_all(Var a) {
    const int ai = a.id;
    Mat out(1, 1);
    out(0, 0) = a.val().sum();
    return a.tape->make(std::move(out), [ai](Tape& t, int o) {
        t.grad(ai).array() += t.grad(o)(0, 0);
    });
}

Var mean_all(Var a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.rows() * a.cols())); }

Var pick_cols(Var a, std::vector<int> cols) {
    if (static_cast<int>(cols.size()) != a.rows()) throw ContractError("pick_cols: one index per row");
    const int ai = a.id;
    Mat out(a.rows(), 1);
    for (Eigen::Index r = 0; r < a.val().rows(); ++r) {
        const int c = cols[static_cast<std::size_t>(r)];
        if (c < 0 || c >= a.cols()) throw ContractError("pick_cols: index out of range");
        out(r, 0) = a.val()(r, c);
    }
    return a.tape->make(std::move(out), [ai, cols = std::move(cols)](Tape& t, int o) {
        for (Eigen::Index r = 0; r < t.val(o).rows(); ++r) {
            t.grad(ai)(r, cols[static_cast<std::size_t>(r)]) += t.grad(o)(r, 0);
        }
    });
}

Var cross_entropy_mean(Var logits, const std::vector<int>& targets) {
    if (static_cast<int>(targets.size()) != logits.rows()) {
        throw ContractError("cross_entropy_mean: one target per row");
    }
    Var logp = log_softmax_rows(logits);
    Var picked = pick_cols(logp, targets);
    return scale(sum_all(picked), -1.0 / static_cast<double>(targets.size()));
}

Var bce_with_logits_mean(Var logits, const Mat& targets01) {
    if (targets01.rows() != logits.rows() || targets01.cols() != logits.cols()) {
        throw ContractError("bce_with_logits_mean: target shape mismatch");
    }
    const int li = logits.id;
    const double n = static_cast<double>(logits.rows() * logits.cols());
    const auto& x = logits.val().array();
    const auto& y = targets01.array();
    Mat loss(1, 1);
    loss(0, 0) = (x.max(0.0) - x * y + (-x.abs()).exp().log1p()).sum() / n;
    Mat target_copy = targets01;
    return logits.tape->make(std::move(loss), [li, target_copy = std::move(target_copy), n](Tape& t, int o) {
        const double g = t.grad(o)(0, 0) / n;
        t.grad(li).array() +=
            g * (1.0 / (1.0 + (-t.val(li).array()).exp()) - target_copy.array());
    });
}

}  // namespace factline::nn
