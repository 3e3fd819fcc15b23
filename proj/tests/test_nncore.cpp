#include <doctest.h>

#include <cmath>
#include <numeric>

#include "aee/errors.hpp"
#include "aee/layers.hpp"
#include "aee/network.hpp"
#include "aee/optim.hpp"
#include "aee/rng.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace aee;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace

TEST_SUITE("nncore") {

TEST_CASE("tensor rejects mismatched data") {
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
    const Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(t(1, 2) == 6.0);
    CHECK(t.channels() == 2);
    CHECK(t.length() == 3);
}

TEST_CASE("rng is reproducible and streams differ") {
    Rng a(5), b(5), c(6);
    for (int i = 0; i < 10; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    Rng r(9);
    const auto s = r.sample_without_replacement(10, 10);
    std::vector<std::size_t> sorted(s);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("conv1d worked examples") {
    const auto a = conv1d_forward(Tensor({1, 4}, std::vector<double>{1, 2, 3, 4}),
                                  Tensor({1, 1, 2}, std::vector<double>{1, 0}), std::vector<double>{0},
                                  1, Padding::valid);
    CHECK(a.data == std::vector<double>{1, 2, 3});
    const auto b = conv1d_forward(Tensor({1, 4}, std::vector<double>{1, 1, 1, 1}),
                                  Tensor({1, 1, 2}, std::vector<double>{1, 1}), std::vector<double>{1},
                                  1, Padding::valid);
    CHECK(b.data == std::vector<double>{3, 3, 3});
}

TEST_CASE("conv1d matches the nested-loop oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t cin = 1 + rng.below(3);
        const std::size_t cout = 1 + rng.below(4);
        const std::size_t len = 16 + rng.below(20);
        const std::size_t k = 1 + rng.below(9);
        const std::size_t stride = 1 + rng.below(3);
        const bool same = trial % 2 == 0;
        const auto x = random_tensor({cin, len}, rng);
        const auto w = random_tensor({cout, cin, k}, rng);
        std::vector<double> bias(cout);
        for (auto& v : bias) v = rng.uniform(-1, 1);
        const auto got = conv1d_forward(x, w, bias, stride, same ? Padding::same : Padding::valid);
        std::size_t lout = 0;
        const auto want = oracle::conv1d(x.data, cin, len, w.data, cout, k, bias, stride, same, &lout);
        REQUIRE(got.shape == Shape{cout, lout});
        for (std::size_t i = 0; i < want.size(); ++i) CHECK(got.data[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
    // The specific shape named for the oracle: length 16, kernel 8, 2 channels.
    const auto x = random_tensor({2, 16}, rng);
    const auto w = random_tensor({3, 2, 8}, rng);
    const std::vector<double> bias{0.1, -0.2, 0.3};
    const auto got = conv1d_forward(x, w, bias, 1, Padding::valid);
    std::size_t lout = 0;
    const auto want = oracle::conv1d(x.data, 2, 16, w.data, 3, 8, bias, 1, false, &lout);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got.data[i] - want[i]) <= 1e-12);
}

TEST_CASE("conv1d errors and zero gradients") {
    const Tensor x({2, 8}, 1.0);
    CHECK_THROWS_AS(conv1d_forward(x, Tensor({1, 3, 2}, 1.0), std::vector<double>{0}, 1, Padding::same),
                    DimensionError);
    CHECK_THROWS_AS(conv1d_forward(x, Tensor({1, 2, 9}, 1.0), std::vector<double>{0}, 1, Padding::valid),
                    DimensionError);
    const auto g = conv1d_backward(x, Tensor({1, 2, 3}, 0.5), 1, Padding::same, Tensor({1, 8}, 0.0));
    for (double v : g.input.data) CHECK(v == 0.0);
    for (double v : g.weights.data) CHECK(v == 0.0);
    CHECK(g.bias[0] == 0.0);
    // One weight, one input: d out / d w == x.
    const auto s = conv1d_backward(Tensor({1, 1}, std::vector<double>{2.5}), Tensor({1, 1, 1}, 3.0), 1,
                                   Padding::valid, Tensor({1, 1}, 1.0));
    CHECK(s.weights.data[0] == 2.5);
    CHECK(s.input.data[0] == 3.0);
}

TEST_CASE("maxpool examples and tie rule") {
    const auto p = maxpool1d_forward(Tensor({1, 4}, std::vector<double>{1, 3, 2, 5}));
    CHECK(p.output.data == std::vector<double>{3, 5});
    CHECK(p.argmax == std::vector<std::size_t>{1, 3});
    const auto t = maxpool1d_forward(Tensor({1, 2}, std::vector<double>{2, 2}));
    CHECK(t.argmax == std::vector<std::size_t>{0});
    const auto g = maxpool1d_backward({1, 4}, p.argmax, Tensor({1, 2}, std::vector<double>{7, 9}));
    CHECK(g.data == std::vector<double>{0, 7, 0, 9});
}

TEST_CASE("activations, dense identity and softmax properties") {
    const auto r = activation_forward(ActivationKind::relu, Tensor::vector({-1, 0, 2}));
    CHECK(r.data == std::vector<double>{0, 0, 2});

    Layer d = make_layer(LayerSpec::dense(3), {3});
    d.weights = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    d.bias = {0, 0, 0};
    const auto x = Tensor::vector({0.3, -2, 7});
    CHECK(layer_forward(d, x, Mode::inference, nullptr, nullptr).data == x.data);

    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        auto v = random_tensor({2, 6}, rng);
        for (auto& e : v.data) e *= 20.0;
        const auto s = activation_forward(ActivationKind::softmax, v);
        for (std::size_t c = 0; c < 2; ++c) {
            const auto row = s.row(c);
            CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
        }
        auto shifted = v;
        for (auto& e : shifted.data) e += 123.0;
        const auto s2 = activation_forward(ActivationKind::softmax, shifted);
        for (std::size_t k = 0; k < s.size(); ++k) CHECK(std::abs(s.data[k] - s2.data[k]) <= 1e-12);
    }
}

TEST_CASE("dropout semantics") {
    Rng rng(1);
    const Tensor x({1, 10}, 1.0);
    CHECK_THROWS_AS(dropout_forward(x, 1.0, Mode::training, &rng), ParameterError);
    CHECK_THROWS_AS(dropout_forward(x, -0.1, Mode::training, &rng), ParameterError);
    CHECK(dropout_forward(x, 0.5, Mode::inference, nullptr).data == x.data);
    Rng a(4), b(4);
    CHECK(dropout_forward(x, 0.3, Mode::training, &a) == dropout_forward(x, 0.3, Mode::training, &b));

    // E[dropout(x)] == x over 1e4 trials, within 3 sigma.
    const double rate = 0.3;
    const int trials = 10000;
    Rng m(8);
    double sum = 0.0;
    for (int i = 0; i < trials; ++i) sum += dropout_forward(Tensor({1, 1}, 1.0), rate, Mode::training, &m).data[0];
    const double sd = std::sqrt(rate / (1 - rate) / trials);
    CHECK(std::abs(sum / trials - 1.0) <= 3 * sd);
}

TEST_CASE("every layer type passes finite differences") {
    Rng rng(21);
    for (int trial = 0; trial < 15; ++trial) {
        const std::uint64_t seed = derive_seed(77, static_cast<std::uint64_t>(trial));
        const std::size_t c = 1 + rng.below(3);
        const std::size_t len = 4 + 2 * rng.below(6);

        Layer conv = make_layer(LayerSpec::conv(1 + rng.below(3), 1 + rng.below(5),
                                                trial % 2 ? Padding::same : Padding::valid,
                                                1 + rng.below(2)),
                                {c, len});
        init_params(conv, rng);
        for (auto& b : conv.bias) b = rng.uniform(-0.5, 0.5);
        CHECK(gradcheck::check_layer(conv, random_tensor({c, len}, rng), seed).max_rel <= 1e-5);

        Layer dense = make_layer(LayerSpec::dense(1 + rng.below(5)), {c * len});
        init_params(dense, rng);
        CHECK(gradcheck::check_layer(dense, random_tensor({c * len}, rng), seed).max_rel <= 1e-5);

        const Shape s{c, len};
        CHECK(gradcheck::check_layer(make_layer(LayerSpec::maxpool(2), s),
                                     Tensor(s, gradcheck::smooth_values(c * len, rng)), seed).max_rel <= 1e-6);
        CHECK(gradcheck::check_layer(make_layer(LayerSpec::upsample(2), s), random_tensor(s, rng), seed).max_rel <= 1e-5);
        for (auto a : {ActivationKind::relu, ActivationKind::tanh, ActivationKind::sigmoid, ActivationKind::softmax}) {
            CHECK(gradcheck::check_layer(make_layer(LayerSpec::act(a), s),
                                         Tensor(s, gradcheck::smooth_values(c * len, rng)), seed).max_rel <= 1e-5);
        }
        CHECK(gradcheck::check_layer(make_layer(LayerSpec::dropout(0.4), s), random_tensor(s, rng), seed,
                                     Mode::training).max_rel <= 1e-5);
        CHECK(gradcheck::check_layer(make_layer(LayerSpec::flatten(), s), random_tensor(s, rng), seed).max_rel <= 1e-5);
        CHECK(gradcheck::check_layer(make_layer(LayerSpec::reshape({len, c}), s), random_tensor(s, rng), seed).max_rel <= 1e-5);
    }
}

TEST_CASE("network backward matches finite differences end to end") {
    Rng rng(5);
    Network net({1, 32}, {LayerSpec::conv(3, 5), LayerSpec::act(ActivationKind::tanh), LayerSpec::maxpool(2),
                          LayerSpec::conv(2, 3), LayerSpec::act(ActivationKind::sigmoid), LayerSpec::flatten(),
                          LayerSpec::dense(3)});
    net.initialize(rng);
    auto x = random_tensor({1, 32}, rng);
    ForwardTrace trace;
    const auto y = net.forward(x, Mode::inference, nullptr, &trace);
    const Tensor r = random_tensor(y.shape, rng);
    auto grads = net.make_grads();
    const auto gx = net.backward(trace, r, &grads);
    auto f = [&] {
        const auto out = net.forward(x);
        double s = 0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out.data[i] * r.data[i];
        return s;
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(oracle::relative_error(gx.data[i], oracle::central_difference(f, x.data[i], 1e-5)) <= 1e-5);
    }
    auto params = net.parameters();
    const auto gv = grad_views(grads);
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            CHECK(oracle::relative_error(gv[p][i], oracle::central_difference(f, params[p][i], 1e-5)) <= 1e-5);
        }
    }
}

TEST_CASE("backward without a matching trace is a state error") {
    Network net({1, 8}, {LayerSpec::conv(2, 3), LayerSpec::flatten(), LayerSpec::dense(2)});
    Rng rng(1);
    net.initialize(rng);
    ForwardTrace empty;
    CHECK_THROWS_AS(net.backward(empty, Tensor({2}, 1.0)), StateError);
}

TEST_CASE("inference is bit-deterministic") {
    Network net({1, 16}, {LayerSpec::conv(4, 3), LayerSpec::act(ActivationKind::relu), LayerSpec::dropout(0.5),
                          LayerSpec::flatten(), LayerSpec::dense(3)});
    Rng rng(2);
    net.initialize(rng);
    const auto x = random_tensor({1, 16}, rng);
    CHECK(net.forward(x) == net.forward(x));
}

TEST_CASE("mse loss") {
    CHECK(mse_loss(Tensor::vector({1, 2}), Tensor::vector({1, 2})).value == 0.0);
    CHECK(mse_loss(Tensor::vector({0, 0}), Tensor::vector({1, 1})).value == 1.0);
    CHECK_THROWS_AS(mse_loss(Tensor::vector({0, 0}), Tensor::vector({1, 1, 1})), DimensionError);
    Rng rng(3);
    const auto p = random_tensor({3, 5}, rng);
    const auto t = random_tensor({3, 5}, rng);
    const auto l = mse_loss(p, t);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(std::abs(l.grad.data[i] - 2.0 * (p.data[i] - t.data[i]) / 15.0) <= 1e-12);
    }
}

TEST_CASE("optimizers") {
    CHECK_THROWS_AS(Optimizer(OptimizerConfig{OptimizerKind::sgd, 0.0}), ParameterError);
    CHECK_THROWS_AS(Optimizer(OptimizerConfig{OptimizerKind::adam, -1.0}), ParameterError);

    std::vector<double> p{0.0, 1.0};
    const std::vector<double> zero{0.0, 0.0};
    Optimizer adam0(OptimizerConfig{});
    adam0.step({std::span<double>(p)}, {std::span<const double>(zero)});
    CHECK(p == std::vector<double>{0.0, 1.0});

    std::vector<double> q{0.0};
    const std::vector<double> one{1.0};
    Optimizer sgd(OptimizerConfig{OptimizerKind::sgd, 0.1});
    sgd.step({std::span<double>(q)}, {std::span<const double>(one)});
    CHECK(q[0] == doctest::Approx(-0.1).epsilon(1e-15));

    std::vector<double> x{1.0};
    Optimizer adam(OptimizerConfig{OptimizerKind::adam, 0.05});
    for (int i = 0; i < 500; ++i) {
        const std::vector<double> g{2.0 * x[0]};
        adam.step({std::span<double>(x)}, {std::span<const double>(g)});
    }
    CHECK(std::abs(x[0]) < 1e-2);
}

}  // TEST_SUITE
