#include <cmath>

#include "doctest.h"
#include "l3ppi/errors.hpp"
#include "l3ppi/nn.hpp"
#include "l3ppi/tensor.hpp"

using namespace l3ppi;

TEST_CASE("forward op values") {
    CHECK(sigmoid(Tensor::scalar(0.0)).value() == doctest::Approx(0.5));
    CHECK(relu(Tensor::scalar(-2.5)).value() == doctest::Approx(0.0));
    CHECK(relu(Tensor::scalar(2.5)).value() == doctest::Approx(2.5));

    Tensor eye = Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor x = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor y = matmul(eye, x);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 2; ++c) CHECK(y.at(r, c) == x.at(r, c));

    CHECK_THROWS_AS(matmul(x, x), std::invalid_argument);
    CHECK_THROWS_AS(add(x, Tensor::from_data({2, 2}, {1, 2, 3, 4})), std::invalid_argument);

    CHECK(sum(Tensor::from_data({2, 2}, {1, 2, 3, 4})).value() == doctest::Approx(10.0));
    CHECK(mean(Tensor::from_data({2, 2}, {1, 2, 3, 4})).value() == doctest::Approx(2.5));
    CHECK(reduce_max(Tensor::from_data({3}, {0.5, 2.0, 1.0})).value() == doctest::Approx(2.0));
}

TEST_CASE("backward on scalar compositions") {
    Tensor x = Tensor::scalar(3.0, true);
    Tensor loss = mul(x, x);
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(6.0));

    Tensor z = Tensor::scalar(0.0, true);
    Tensor s = sigmoid(z);
    backward(s);
    CHECK(z.grad()[0] == doctest::Approx(0.25));

    CHECK_THROWS_AS(backward(Tensor::from_data({2}, {1, 2}, true)), std::invalid_argument);
}

TEST_CASE("gradients accumulate across backward calls until cleared") {
    Tensor x = Tensor::scalar(2.0, true);
    backward(mul(x, x));
    backward(mul(x, x));
    CHECK(x.grad()[0] == doctest::Approx(8.0));
    x.zero_grad();
    CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("grad_check trivial cases") {
    Tensor p = Tensor::from_data({2, 2}, {0.3, -0.2, 0.5, 0.9}, true);

    // constant function: both gradients vanish
    auto constant = [&]() { return Tensor::scalar(1.5); };
    Tensor dummy[] = {p};
    CHECK(grad_check(constant, dummy) == doctest::Approx(0.0));

    // f = sum(p): analytic all-ones matches finite differences tightly
    auto total = [&]() { return sum(p); };
    CHECK(grad_check(total, dummy, 1e-5) < 1e-8);
}

TEST_CASE("two-layer mlp passes the finite-difference oracle") {
    Rng rng = make_rng(17);
    Mlp mlp = make_mlp(4, std::array<int, 2>{8, 1}, rng);
    Tensor input = Tensor::from_data({1, 4}, {0.3, -0.7, 0.2, 1.1});
    std::vector<Tensor> params;
    collect_parameters(mlp, params);

    auto f = [&]() { return sum(sigmoid(mlp_forward(mlp, input))); };
    CHECK(grad_check(f, params, 1e-5) < 1e-4);
}

TEST_CASE("every differentiable op passes grad_check on randomized shapes") {
    Rng rng = make_rng(23);
    std::normal_distribution<double> dist(0.0, 1.0);
    auto random_tensor = [&](std::vector<int> shape) {
        std::vector<double> data(static_cast<std::size_t>(shape[0]) *
                                 static_cast<std::size_t>(shape.size() > 1 ? shape[1] : 1));
        for (double& x : data) x = dist(rng);
        return Tensor::from_data(shape, std::move(data), true);
    };

    Tensor a = random_tensor({3, 4});
    Tensor b = random_tensor({3, 4});
    Tensor m = random_tensor({4, 2});
    Tensor row = random_tensor({1, 4});
    std::vector<Tensor> params{a, b, m, row};

    auto f = [&]() {
        Tensor h = add(a, row);          // row broadcast
        h = mul(h, b);                   // elementwise
        h = matmul(h, m);                // (3,2)
        h = relu(add_scalar(h, 0.05));
        h = sigmoid(h);
        Tensor g = gather_rows(h, {2, 0});
        const Tensor parts[] = {h, g};
        Tensor c = concat_rows(parts);
        Tensor lg = log_t(add_scalar(clamp(c, 1e-6, 1.0 - 1e-6), 1.0));
        return add(mean(lg), mul_scalar(reduce_max(c), 0.25));
    };
    CHECK(grad_check(f, params, 1e-5) < 1e-4);
}

TEST_CASE("adam behavior") {
    SUBCASE("zero grads leave parameters unchanged") {
        Tensor p = Tensor::scalar(1.25, true);
        Adam opt({p}, {});
        p.zero_grad();
        opt.step();
        CHECK(p.value() == doctest::Approx(1.25));
    }

    SUBCASE("one step descends on p^2") {
        Tensor p = Tensor::scalar(1.0, true);
        AdamConfig cfg;
        cfg.lr = 0.1;
        Adam opt({p}, cfg);
        backward(mul(p, p));
        opt.step();
        CHECK(p.value() < 1.0);
    }

    SUBCASE("200 steps converge on (p-3)^2") {
        Tensor p = Tensor::scalar(1.0, true);
        AdamConfig cfg;
        cfg.lr = 0.1;
        Adam opt({p}, cfg);
        for (int i = 0; i < 200; ++i) {
            opt.zero_grad();
            Tensor diff = add_scalar(p, -3.0);
            backward(mul(diff, diff));
            opt.step();
        }
        CHECK(std::abs(p.value() - 3.0) < 1e-2);
    }

    SUBCASE("missing grads are an error") {
        Tensor p = Tensor::scalar(1.0, true);
        Adam opt({p}, {});
        CHECK_THROWS_AS(opt.step(), ComputeError);
    }
}

TEST_CASE("dropout is inverted and disabled outside training") {
    Tensor x = Tensor::full({1, 1000}, 1.0);
    Rng rng = make_rng(5);
    DropoutCtx train_ctx{0.25, &rng, true};
    Tensor dropped = dropout(x, &train_ctx);
    double total = 0.0;
    std::size_t zeros = 0;
    for (double v : dropped.data()) {
        total += v;
        if (v == 0.0) ++zeros;
    }
    CHECK(zeros > 150);
    CHECK(zeros < 350);
    CHECK(total / 1000.0 == doctest::Approx(1.0).epsilon(0.1));  // inverted scaling

    DropoutCtx eval_ctx{0.25, &rng, false};
    Tensor kept = dropout(x, &eval_ctx);
    for (double v : kept.data()) CHECK(v == 1.0);
}

TEST_CASE("deterministic forward and gradients under a fixed seed") {
    auto run = [] {
        Rng rng = make_rng(77);
        Mlp mlp = make_mlp(3, std::array<int, 2>{5, 1}, rng);
        Tensor x = Tensor::from_data({1, 3}, {0.1, 0.2, 0.3});
        Tensor loss = sum(mlp_forward(mlp, x));
        backward(loss);
        std::vector<double> out{loss.value()};
        std::vector<Tensor> params;
        collect_parameters(mlp, params);
        for (const Tensor& p : params)
            out.insert(out.end(), p.grad().begin(), p.grad().end());
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("batch-parallel sink accumulation matches serial totals") {
    Tensor w = Tensor::from_data({1, 1}, {0.5}, true);
    auto loss_for = [&](double x) {
        Tensor input = Tensor::from_data({1, 1}, {x});
        return sum(mul(matmul(input, w), matmul(input, w)));
    };

    w.zero_grad();
    for (double x : {1.0, 2.0, 3.0}) backward(loss_for(x), 1.0 / 3.0);
    const double serial = w.grad()[0];

    w.zero_grad();
    GradSink sink;
    {
        GradSinkScope scope(sink);
        for (double x : {1.0, 2.0, 3.0}) backward(loss_for(x), 1.0 / 3.0);
    }
    const bool leaked = !w.grad().empty() && w.grad()[0] != 0.0;
    CHECK_FALSE(leaked);  // nothing leaked past the sink
    Tensor params[] = {w};
    merge_grad_sink(sink, params);
    CHECK(w.grad()[0] == doctest::Approx(serial).epsilon(1e-12));
}
