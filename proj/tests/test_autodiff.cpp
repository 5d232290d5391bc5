#include <doctest.h>

#include "helpers.hpp"
#include "tversky/autodiff/gradcheck.hpp"
#include "tversky/autodiff/nn.hpp"
#include "tversky/autodiff/ops.hpp"
#include "tversky/autodiff/optim.hpp"

using namespace tversky;
using tvtest::random_tensor;

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("matmul identity and hand arithmetic") {
    Graph<double> g;
    auto a = g.constant(Tensor<double>::matrix(2, 2, {1, 0, 0, 1}));
    auto b = g.constant(Tensor<double>::matrix(2, 1, {2, 3}));
    auto c = matmul(a, b);
    CHECK(c.value().data == std::vector<double>{2, 3});

    auto d = g.constant(Tensor<double>::matrix(1, 2, {1, 1}));
    auto e = g.constant(Tensor<double>::matrix(2, 1, {0.5, -1}));
    CHECK(matmul(d, e).value().data[0] == doctest::Approx(-0.5));

    CHECK_THROWS(matmul(a, d));  // inner dims 2 vs 1
}

TEST_CASE("matmul gradient matches finite differences") {
    Rng rng(7);
    Tensor<double> a0 = random_tensor(rng, {3, 3});
    Tensor<double> b0 = random_tensor(rng, {3, 3});
    auto rep = finite_diff_check_multi(
        [](Graph<double>& g, const std::vector<Var<double>>& vs) {
            return sum(matmul(vs[0], vs[1]));
        },
        {a0, b0});
    CHECK(rep.max_rel_err < 1e-6);
    CHECK(rep.excluded.empty());
}

TEST_CASE("relu forward, subgradient and idempotence") {
    Graph<double> g;
    auto x = g.param(Tensor<double>::row({-1, 0, 2}));
    auto y = relu(x);
    CHECK(y.value().data == std::vector<double>{0, 0, 2});
    g.backward(sum(y));
    CHECK(x.grad().data == std::vector<double>{0, 0, 1});

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Graph<double> g2;
        auto v = g2.constant(random_tensor(rng, {5}));
        auto r1 = relu(v);
        auto r2 = relu(r1);
        CHECK(r1.value().data == r2.value().data);
    }
}

TEST_CASE("conv2d forward cases") {
    Graph<double> g;
    auto in = g.constant(Tensor<double>::full({1, 1, 3, 3}, 1.0));
    auto k = g.constant(Tensor<double>::full({1, 1, 3, 3}, 1.0));
    auto out = conv2d(in, k, 1, 0);
    CHECK(out.value().shape == std::vector<int64_t>{1, 1, 1, 1});
    CHECK(out.value().data[0] == doctest::Approx(9.0));

    // delta kernel reproduces the interior
    Rng rng(11);
    Tensor<double> img = random_tensor(rng, {1, 1, 5, 5});
    Tensor<double> delta({1, 1, 3, 3});
    delta.data[4] = 1.0;  // centre
    Graph<double> g2;
    auto o2 = conv2d(g2.constant(img), g2.constant(delta), 1, 0);
    for (int64_t i = 0; i < 3; ++i)
        for (int64_t j = 0; j < 3; ++j)
            CHECK(o2.value().data[static_cast<size_t>(i * 3 + j)] ==
                  doctest::Approx(img.data[static_cast<size_t>((i + 1) * 5 + (j + 1))]));

    Graph<double> g3;
    auto in3 = g3.constant(Tensor<double>::full({1, 1, 3, 3}, 1.0));
    auto k5 = g3.constant(Tensor<double>::full({1, 1, 5, 5}, 1.0));
    CHECK_THROWS(conv2d(in3, k5, 1, 0));  // kernel larger than input
    CHECK_THROWS(conv2d(in3, k5, 0, 0));  // invalid stride
    CHECK_THROWS(conv2d(in3, k5, 1, -1)); // invalid padding
}

TEST_CASE("conv2d gradient matches finite differences") {
    Rng rng(13);
    Tensor<double> in0 = random_tensor(rng, {1, 2, 5, 5});
    Tensor<double> k0 = random_tensor(rng, {2, 2, 3, 3});
    auto rep = finite_diff_check_multi(
        [](Graph<double>& g, const std::vector<Var<double>>& vs) {
            return sum(conv2d(vs[0], vs[1], 1, 1));
        },
        {in0, k0});
    CHECK(rep.max_rel_err < 1e-5);

    // strided + padded variant
    auto rep2 = finite_diff_check_multi(
        [](Graph<double>& g, const std::vector<Var<double>>& vs) {
            return sum(conv2d(vs[0], vs[1], 2, 1));
        },
        {in0, k0});
    CHECK(rep2.max_rel_err < 1e-5);

    // stride-1 unpadded path
    auto rep3 = finite_diff_check_multi(
        [](Graph<double>& g, const std::vector<Var<double>>& vs) {
            auto h = conv2d(vs[0], vs[1], 1, 0);
            return sum(mul(h, h));
        },
        {in0, k0});
    CHECK(rep3.max_rel_err < 1e-5);
}

TEST_CASE("global_avg_pool forward and gradient") {
    Graph<double> g;
    auto c = g.constant(Tensor<double>::full({2, 3, 4, 4}, 2.5));
    auto o = global_avg_pool(c);
    for (double v : o.value().data) CHECK(v == doctest::Approx(2.5));

    Graph<double> g2;
    auto x = g2.param(Tensor<double>({1, 1, 2, 2}, {1, 3, 5, 7}));
    auto o2 = global_avg_pool(x);
    CHECK(o2.value().data[0] == doctest::Approx(4.0));
    g2.backward(sum(o2));
    for (double v : x.grad().data) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("softmax cross entropy values and gradient") {
    Graph<double> g;
    auto l = g.constant(Tensor<double>::matrix(1, 2, {0, 0}));
    CHECK(softmax_cross_entropy(l, {0}).value().data[0] == doctest::Approx(std::log(2.0)));

    auto big = g.constant(Tensor<double>::matrix(1, 2, {1000, 0}));
    double v = softmax_cross_entropy(big, {0}).value().data[0];
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(0.0).epsilon(1e-9));

    CHECK_THROWS(softmax_cross_entropy(l, {2}));

    Rng rng(17);
    Tensor<double> l0 = random_tensor(rng, {4, 5});
    auto rep = finite_diff_check_multi(
        [](Graph<double>& g2, const std::vector<Var<double>>& vs) {
            return softmax_cross_entropy(vs[0], {1, 0, 4, 2});
        },
        {l0});
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("backward: gradient of simple reductions") {
    Graph<double> g;
    auto p = g.param(Tensor<double>::row({1, -2, 3}));
    g.backward(sum(p));
    CHECK(p.grad().data == std::vector<double>{1, 1, 1});

    Graph<double> g2;
    auto q = g2.param(Tensor<double>::row({1, -2, 3}));
    g2.backward(sum(mul(q, q)));
    CHECK(q.grad().data == std::vector<double>{2, -4, 6});

    Graph<double> g3;
    auto r = g3.param(Tensor<double>::matrix(2, 2, {1, 2, 3, 4}));
    CHECK_THROWS(g3.backward(r));  // non-scalar loss
}

TEST_CASE("backward accumulates over multiple uses") {
    Graph<double> g;
    auto p = g.param(Tensor<double>::row({2, 5}));
    auto loss = add(sum(p), sum(mul(p, p)));
    g.backward(loss);
    CHECK(p.grad().data[0] == doctest::Approx(1 + 4));
    CHECK(p.grad().data[1] == doctest::Approx(1 + 10));
}

TEST_CASE("backward is linear in the loss") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor<double> x0 = random_tensor(rng, {4});
        double c = rng.uniform(-2, 2);
        auto grad_of = [&](double scale_l2) {
            Graph<double> g;
            auto x = g.param(x0);
            auto l1 = sum(mul(x, x));
            auto l2 = sum(relu(x));
            auto loss = add(l1, scale(l2, scale_l2));
            g.backward(loss);
            return x.grad().data;
        };
        auto g1 = grad_of(0.0);
        auto gc = grad_of(c);
        Graph<double> g;
        auto x = g.param(x0);
        g.backward(sum(relu(x)));
        auto g2 = x.grad().data;
        for (size_t i = 0; i < g1.size(); ++i)
            CHECK(gc[i] == doctest::Approx(g1[i] + c * g2[i]).epsilon(1e-12));
    }
}

TEST_CASE("seeded forward+backward is bit-identical") {
    auto run = [] {
        Graph<double> g(99);
        g.training = true;
        auto x = g.param(Tensor<double>::matrix(2, 3, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6}));
        auto h = dropout(relu(x), 0.3);
        g.backward(sum(mul(h, h)));
        return x.grad().data;
    };
    auto a = run(), b = run();
    CHECK(a == b);
}

TEST_CASE("optimizer: sgd and adam basics") {
    Tensor<double> p = Tensor<double>::scalar(0.0);
    Tensor<double> gr = Tensor<double>::scalar(1.0);
    auto sgd = Optimizer<double>::sgd(1.0);
    sgd.step({&p}, {&gr});
    CHECK(p.data[0] == doctest::Approx(-1.0));

    // Adam's first step moves by ~lr regardless of gradient scale
    for (double scale : {1.0, 1e-3, 1e3}) {
        Tensor<double> q = Tensor<double>::scalar(0.0);
        Tensor<double> gq = Tensor<double>::scalar(scale);
        auto adam = Optimizer<double>::adam(0.01);
        adam.step({&q}, {&gq});
        CHECK(q.data[0] == doctest::Approx(-0.01).epsilon(1e-6));
    }

    // zero gradient + zero weight decay leaves the parameter unchanged
    Tensor<double> r = Tensor<double>::scalar(3.25);
    Tensor<double> gz = Tensor<double>::scalar(0.0);
    auto adam = Optimizer<double>::adam(0.01);
    adam.step({&r}, {&gz});
    CHECK(r.data[0] == doctest::Approx(3.25));

    Tensor<double> bad = Tensor<double>::row({1, 2});
    CHECK_THROWS(adam.step({&r}, {&bad}));
}

TEST_CASE("finite_diff_check: smooth function and boundary exclusion") {
    GradCheckReport rep;
    double err = finite_diff_check(
        [](Graph<double>& g, Var<double> x) { return sum(mul(x, x)); },
        Tensor<double>::row({1, 2}), 1e-6, &rep);
    CHECK(err < 1e-8);
    CHECK(rep.checked == 2);

    // relu at exactly zero: the perturbed passes disagree on the mask, so the
    // coordinate is flagged as mask-boundary and excluded
    GradCheckReport rep2;
    finite_diff_check([](Graph<double>& g, Var<double> x) { return sum(relu(x)); },
                      Tensor<double>::row({0.0, 1.0}), 1e-6, &rep2);
    REQUIRE(rep2.excluded.size() == 1);
    CHECK(rep2.excluded[0] == 0);
    CHECK(rep2.checked == 1);
}

TEST_CASE("transpose, reshape, concat, bias, slice gradients") {
    Rng rng(31);
    Tensor<double> a0 = random_tensor(rng, {3, 4});
    Tensor<double> b0 = random_tensor(rng, {3, 2});
    Tensor<double> bias0 = random_tensor(rng, {6});
    auto rep = finite_diff_check_multi(
        [](Graph<double>& g, const std::vector<Var<double>>& vs) {
            auto cat = concat_cols<double>({vs[0], vs[1]});
            auto withb = add_bias(cat, vs[2]);
            auto t = transpose2d(withb);
            auto s = slice_rows(t, 1, 4);
            return sum(mul(s, s));
        },
        {a0, b0, bias0});
    CHECK(rep.max_rel_err < 1e-7);
}

TEST_CASE("l2_normalize_rows gradient and zero-vector error") {
    Rng rng(37);
    Tensor<double> x0 = random_tensor(rng, {2, 3}, 0.2, 1.0);
    auto rep2 = finite_diff_check_multi(
        [](Graph<double>& g, const std::vector<Var<double>>& vs) {
            auto y = l2_normalize_rows(vs[0]);
            auto w = g.constant(Tensor<double>::matrix(2, 3, {1, 2, 3, -1, 0.5, 2}));
            return sum(mul(y, w));
        },
        {x0});
    CHECK(rep2.max_rel_err < 1e-6);

    Graph<double> g;
    auto z = g.constant(Tensor<double>::matrix(1, 2, {0, 0}));
    CHECK_THROWS(l2_normalize_rows(z));
}

TEST_CASE("maxpool2 forward and gradient") {
    Graph<double> g;
    auto x = g.param(Tensor<double>({1, 1, 2, 4}, {1, 2, 5, 3, 4, 0, 1, 2}));
    auto y = maxpool2(x);
    CHECK(y.value().shape == std::vector<int64_t>{1, 1, 1, 2});
    CHECK(y.value().data == std::vector<double>{4, 5});
    g.backward(sum(y));
    CHECK(x.grad().data == std::vector<double>{0, 0, 1, 0, 1, 0, 0, 0});
}

TEST_SUITE_END();
