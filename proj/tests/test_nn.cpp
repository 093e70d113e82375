#include <doctest.h>

#include "factline/common.hpp"
#include "factline/nn/autograd.hpp"
#include "factline/nn/optim.hpp"
#include "support/grad_check.hpp"

using namespace factline;
using namespace factline::nn;
using factline::testing::grad_check;

namespace {

Mat random_mat(Rng& rng, int r, int c, double scale = 1.0) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) m(i, j) = rng.normal() * scale;
    }
    return m;
}

}  // namespace

TEST_CASE("forward values of basic ops") {
    Tape t;
    Mat a(2, 2), b(2, 2);
    a << 1, 2, 3, 4;
    b << 5, 6, 7, 8;
    Var va = t.constant(a), vb = t.constant(b);
    CHECK(add(va, vb).val()(1, 1) == 12);
    CHECK(sub(va, vb).val()(0, 0) == -4);
    CHECK(mul(va, vb).val()(0, 1) == 12);
    CHECK(matmul(va, vb).val()(0, 0) == doctest::Approx(19));
    CHECK(matmul_nt(va, vb).val()(0, 0) == doctest::Approx(17));
    CHECK(sum_all(va).val()(0, 0) == 10);
    CHECK(mean_all(va).val()(0, 0) == 2.5);
}

TEST_CASE("softmax rows sum to one and log_softmax is its log") {
    Rng rng(1);
    Tape t;
    const Mat x = random_mat(rng, 5, 7);
    const Mat sm = softmax_rows(t.constant(x)).val();
    const Mat lsm = log_softmax_rows(t.constant(x)).val();
    for (int r = 0; r < 5; ++r) {
        CHECK(sm.row(r).sum() == doctest::Approx(1.0));
        for (int c = 0; c < 7; ++c) {
            CHECK(std::log(sm(r, c)) == doctest::Approx(lsm(r, c)).epsilon(1e-9));
        }
    }
}

TEST_CASE("l2_normalize_rows produces unit rows and guards zero") {
    Tape t;
    Mat x(2, 3);
    x << 3, 4, 0, 0, 0, 0;
    const Mat y = l2_normalize_rows(t.constant(x), 1e-12).val();
    CHECK(y.row(0).norm() == doctest::Approx(1.0));
    CHECK(y(0, 0) == doctest::Approx(0.6));
    CHECK(y.row(1).norm() == doctest::Approx(0.0));  // zero row stays finite
}

TEST_CASE("gradients match finite differences across ops") {
    Rng rng(42);
    auto check = [&](const char* name, std::vector<Mat> inputs,
                     const factline::testing::GraphFn& f) {
        const double err = grad_check(std::move(inputs), f);
        INFO(name);
        CHECK(err < 1e-4);
    };

    check("matmul+add chain", {random_mat(rng, 3, 4), random_mat(rng, 4, 2), random_mat(rng, 3, 2)},
          [](Tape& t, const std::vector<Var>& v) {
              return sum_all(mul(add(matmul(v[0], v[1]), v[2]), v[2]));
          });
    check("softmax", {random_mat(rng, 4, 5)}, [](Tape& t, const std::vector<Var>& v) {
        (void)t;
        return sum_all(mul(softmax_rows(v[0]), v[0]));
    });
    check("log_softmax", {random_mat(rng, 4, 5)}, [](Tape& t, const std::vector<Var>& v) {
        (void)t;
        return mean_all(mul(log_softmax_rows(v[0]), v[0]));
    });
    check("layer_norm", {random_mat(rng, 4, 6)}, [](Tape& t, const std::vector<Var>& v) {
        (void)t;
        return sum_all(mul(layer_norm_rows(v[0]), v[0]));
    });
    check("l2_normalize", {random_mat(rng, 4, 6)}, [](Tape& t, const std::vector<Var>& v) {
        (void)t;
        return sum_all(mul(l2_normalize_rows(v[0]), v[0]));
    });
    check("row_dot", {random_mat(rng, 5, 3), random_mat(rng, 5, 3)},
          [](Tape& t, const std::vector<Var>& v) {
              (void)t;
              return sum_all(row_dot(v[0], v[1]));
          });
    check("tanh sigmoid softplus", {random_mat(rng, 3, 3)},
          [](Tape& t, const std::vector<Var>& v) {
              (void)t;
              return sum_all(add(tanh_v(v[0]), add(sigmoid(v[0]), softplus(v[0]))));
          });
    check("rowvec broadcast", {random_mat(rng, 4, 3), random_mat(rng, 1, 3), random_mat(rng, 1, 3)},
          [](Tape& t, const std::vector<Var>& v) {
              (void)t;
              return sum_all(tanh_v(add_rowvec(mul_rowvec(v[0], v[1]), v[2])));
          });
    check("gather + stack + block",
          {random_mat(rng, 5, 4), random_mat(rng, 2, 4)},
          [](Tape& t, const std::vector<Var>& v) {
              (void)t;
              Var g = gather_rows(v[0], {0, 2, 2, 4});
              Var s = vstack({g, v[1]});
              Var h = hstack({block(s, 0, 0, 3, 2), block(s, 3, 2, 3, 2)});
              return sum_all(mul(h, h));
          });
    check("max_pool", {random_mat(rng, 6, 3)}, [](Tape& t, const std::vector<Var>& v) {
        (void)t;
        return sum_all(mul(max_pool_rows(v[0], {{0, 2}, {2, 3}, {5, 1}}), v[0].tape->constant(Mat::Ones(3, 3))));
    });
    check("cross_entropy", {random_mat(rng, 4, 6)}, [](Tape& t, const std::vector<Var>& v) {
        (void)t;
        return cross_entropy_mean(v[0], {1, 0, 5, 3});
    });
    Mat targets(3, 4);
    targets << 1, 0, 1, 0, 0, 0, 1, 1, 1, 1, 0, 0;
    check("bce_with_logits", {random_mat(rng, 3, 4)},
          [targets](Tape& t, const std::vector<Var>& v) {
              (void)t;
              return bce_with_logits_mean(v[0], targets);
          });
    check("attention-like composite",
          {random_mat(rng, 4, 6), random_mat(rng, 6, 6), random_mat(rng, 6, 6),
           random_mat(rng, 6, 6)},
          [](Tape& t, const std::vector<Var>& v) {
              (void)t;
              Var q = matmul(v[0], v[1]);
              Var k = matmul(v[0], v[2]);
              Var val = matmul(v[0], v[3]);
              Var att = softmax_rows(scale(matmul_nt(q, k), 1.0 / std::sqrt(6.0)));
              Var out = matmul(att, val);
              return mean_all(mul(out, out));
          });
}

TEST_CASE("pick_cols and cross_entropy values") {
    Tape t;
    Mat logits = Mat::Zero(2, 3);
    const double ce = cross_entropy_mean(t.constant(logits), {0, 2}).val()(0, 0);
    CHECK(ce == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    Mat x(2, 2);
    x << 1, 2, 3, 4;
    CHECK(pick_cols(t.constant(x), {1, 0}).val()(0, 0) == 2);
    CHECK(pick_cols(t.constant(x), {1, 0}).val()(1, 0) == 3);
}

TEST_CASE("bce value at zero logits is ln2") {
    Tape t;
    Mat logits = Mat::Zero(3, 5);
    Mat targets = Mat::Zero(3, 5);
    targets(0, 0) = 1;
    const double loss = bce_with_logits_mean(t.constant(logits), targets).val()(0, 0);
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("backward flushes into bound parameters and accumulates") {
    ParamStore store;
    Param& w = store.create("w", 2, 2);
    w.value << 1, 2, 3, 4;
    for (int rep = 0; rep < 2; ++rep) {
        Tape t;
        Var wv = t.leaf(w);
        t.backward(sum_all(mul(wv, wv)));
    }
    // d/dw sum(w*w) = 2w, accumulated twice
    CHECK(w.grad(0, 0) == doctest::Approx(4.0));
    CHECK(w.grad(1, 1) == doctest::Approx(16.0));
    store.zero_grads();
    CHECK(w.grad.norm() == 0.0);
}

TEST_CASE("shape violations throw") {
    Tape t;
    Var a = t.constant(Mat::Zero(2, 3));
    Var b = t.constant(Mat::Zero(3, 2));
    CHECK_THROWS_AS(add(a, b), ContractError);
    CHECK_THROWS_AS(matmul(a, a), ContractError);
    CHECK_THROWS_AS(t.backward(a), ContractError);
    CHECK_THROWS_AS(gather_rows(a, {5}), ContractError);
    CHECK_THROWS_AS(pick_cols(a, {0}), ContractError);
}

TEST_CASE("adamw minimizes a quadratic deterministically") {
    auto run = [] {
        ParamStore store;
        Param& w = store.create("w", 1, 4);
        w.value << 4, -3, 2, -1;
        AdamW opt({.weight_decay = 0.0});
        for (int i = 0; i < 400; ++i) {
            Tape t;
            Var wv = t.leaf(w);
            t.backward(sum_all(mul(wv, wv)));
            opt.step(store, 0.05);
        }
        return w.value;
    };
    const Mat w1 = run();
    const Mat w2 = run();
    CHECK(w1.norm() < 1e-2);
    CHECK((w1 - w2).norm() == 0.0);  // bitwise reproducible
}

TEST_CASE("adamw applies weight decay") {
    ParamStore store;
    Param& w = store.create("w", 1, 1);
    w.value(0, 0) = 1.0;
    AdamW opt({.weight_decay = 0.5});
    // zero gradient: only decay acts
    opt.step(store, 0.1);
    CHECK(w.value(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5));
}
