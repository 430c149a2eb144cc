#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "dsmm/numerics/autodiff.hpp"
#include "dsmm/numerics/errors.hpp"
#include "dsmm/numerics/optim.hpp"
#include "dsmm/numerics/rng.hpp"
#include "../common/nets.hpp"
#include "../common/oracle.hpp"

using namespace dsmm;
using num::Graph;
using num::ParamSet;
using num::ParamVars;
using num::Tensor;
using num::Var;
using nets::random_matrix;
using nets::random_net_params;
using nets::RandomNet;


TEST_CASE("gradient of sum is all ones") {
    ParamSet p;
    p.add("p", Tensor::matrix(2, 2, {1.0, -2.0, 3.0, 0.5}));
    const auto [value, grads] = num::value_and_grad([](Graph& g, const ParamVars& v) { return g.sum(v[0]); }, p);
    CHECK(value == doctest::Approx(2.5));
    for (double d : grads[0].data()) CHECK(d == 1.0);
}

TEST_CASE("zero-scaled loss has zero gradient") {
    ParamSet p;
    p.add("p", Tensor::matrix(2, 3, 1.5));
    const auto [value, grads] =
        num::value_and_grad([](Graph& g, const ParamVars& v) { return g.scale(g.sum(g.tanh(v[0])), 0.0); }, p);
    CHECK(value == 0.0);
    CHECK(grads.max_abs() == 0.0);
}

TEST_CASE("finite differences of x^2 at 3") {
    ParamSet p;
    p.add("x", Tensor::scalar(3.0));
    auto square = [](Graph& g, const ParamVars& v) { return g.mul(v[0], v[0]); };
    const auto fd = num::finite_diff_grad(square, p, 1e-5);
    CHECK(std::abs(fd[0].item() - 6.0) <= 1e-8);

    auto constant = [](Graph& g, const ParamVars& v) { return g.add_scalar(g.scale(v[0], 0.0), 4.0); };
    CHECK(num::finite_diff_grad(constant, p, 1e-5).max_abs() == 0.0);
}

TEST_CASE("mean of sigmoid(Wx) matches central differences") {
    num::Rng rng(11, "sigmoid-wx");
    ParamSet p;
    p.add("w", random_matrix(rng, 4, 3));
    const Tensor x = random_matrix(rng, 5, 4);
    auto loss = [&](Graph& g, const ParamVars& v) { return g.mean(g.sigmoid(g.matmul(g.constant(x), v[0]))); };
    const auto [value, grads] = num::value_and_grad(loss, p);
    CHECK(oracle::worst_ratio(grads, oracle::central_diff(loss, p, 1e-5), 1e-6, 1e-9) <= 1.0);
}

TEST_CASE("random composite networks: reverse mode agrees with central differences") {
    for (int seed = 0; seed < 12; ++seed) {
        CAPTURE(seed);
        num::Rng rng(static_cast<std::uint64_t>(seed), "composite");
        const std::size_t in = 2 + rng.below(4);
        const std::size_t hidden = 2 + rng.below(4);
        const std::size_t batch = 1 + rng.below(5);
        const RandomNet net{random_matrix(rng, batch, in), hidden, seed};
        const auto params = random_net_params(rng, in, hidden);
        const auto [value, grads] = num::value_and_grad(net, params);
        const auto fd = oracle::central_diff(net, params, 1e-5);
        CHECK(value == num::evaluate(net, params));
        CHECK(oracle::worst_ratio(grads, fd, 1e-6, 1e-9) <= 1.0);
        // The library's own finite differences agree with the test-side ones.
        CHECK(oracle::worst_ratio(num::finite_diff_grad(net, params, 1e-5), fd, 1e-12, 1e-12) <= 1.0);
    }
}

TEST_CASE("row broadcast add sums gradients over rows") {
    ParamSet p;
    p.add("b", Tensor::row({1.0, 2.0}));
    const Tensor x = Tensor::matrix(3, 2, 0.0);
    const auto [value, grads] = num::value_and_grad(
        [&](Graph& g, const ParamVars& v) { return g.sum(g.add(g.constant(x), v[0])); }, p);
    CHECK(value == 9.0);
    CHECK(grads[0][0] == 3.0);
    CHECK(grads[0][1] == 3.0);
}

TEST_CASE("log clamps at the floor") {
    Graph g;
    const Var v = g.log(g.constant(Tensor::row({0.0, 1.0})));
    CHECK(g.value(v)[0] == doctest::Approx(std::log(num::kLogFloor)));
    CHECK(g.value(v)[1] == 0.0);
}

TEST_CASE("non-finite forward values name the primitive") {
    Graph g;
    const Var big = g.constant(Tensor::scalar(1e308));
    try {
        g.scale(big, 10.0);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("scale") != std::string::npos);
    }
}

TEST_CASE("shape mismatches are contract errors") {
    Graph g;
    const Var a = g.constant(Tensor::matrix(2, 3));
    const Var b = g.constant(Tensor::matrix(2, 3));
    CHECK_THROWS_AS(g.matmul(a, b), ContractError);
    CHECK_THROWS_AS(g.add(a, g.constant(Tensor::matrix(3, 2))), ContractError);
    ParamSet p;
    p.add("p", Tensor::matrix(2, 2));
    num::GradSet wrong({Tensor::matrix(2, 3)});
    CHECK_THROWS_AS(num::sgd_step(p, wrong, 0.1), ContractError);
}

TEST_CASE("sgd step examples and purity") {
    ParamSet p;
    p.add("p", Tensor::scalar(1.0));
    num::GradSet g({Tensor::scalar(2.0)});
    const ParamSet before = p;
    CHECK(num::sgd_step(p, g, 0.5)[0].item() == 0.0);
    CHECK(oracle::bit_equal(p, before));
    CHECK(oracle::bit_equal(num::sgd_step(p, g, 0.0), p));
    CHECK(oracle::bit_equal(num::sgd_step(p, num::GradSet::zeros_like(p), 0.7), p));
    CHECK(oracle::bit_equal(num::sgd_step(p, g, 0.3), num::sgd_step(p, g, 0.3)));
}

TEST_CASE("adam first step moves each scalar by about lr") {
    num::Rng rng(3, "adam");
    ParamSet p;
    p.add("p", random_matrix(rng, 3, 4));
    num::GradSet g({random_matrix(rng, 3, 4)});
    const auto state = num::AdamState::zeros_like(p);
    const num::AdamHyper hyper;
    const double lr = 0.01;
    const auto [next, next_state] = num::adam_step(p, g, state, lr, 1, hyper);
    for (std::size_t k = 0; k < p[0].size(); ++k) {
        const double gk = std::abs(g[0][k]);
        const double expected = lr * gk / (gk + hyper.eps);
        CHECK(std::abs(p[0][k] - next[0][k]) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(std::abs(p[0][k] - next[0][k]) == doctest::Approx(lr).epsilon(1e-6));
    }
    const auto [same, same_state] = num::adam_step(p, num::GradSet::zeros_like(p), state, lr, 1, hyper);
    CHECK(oracle::bit_equal(same, p));
    CHECK_THROWS_AS(num::adam_step(p, g, state, lr, 0, hyper), ContractError);
}

TEST_CASE("adam on x^2 follows the scalar recurrence") {
    ParamSet p;
    p.add("x", Tensor::scalar(5.0));
    auto state = num::AdamState::zeros_like(p);
    const num::AdamHyper hyper;
    double x = 5.0, m = 0.0, v = 0.0;
    for (std::uint64_t t = 1; t <= 100; ++t) {
        num::GradSet g({Tensor::scalar(2.0 * p[0].item())});
        auto [next, next_state] = num::adam_step(p, g, state, 0.1, t, hyper);
        p = std::move(next);
        state = std::move(next_state);

        const double gx = 2.0 * x;
        m = hyper.beta1 * m + (1 - hyper.beta1) * gx;
        v = hyper.beta2 * v + (1 - hyper.beta2) * gx * gx;
        const double mhat = m / (1 - std::pow(hyper.beta1, static_cast<double>(t)));
        const double vhat = v / (1 - std::pow(hyper.beta2, static_cast<double>(t)));
        x -= 0.1 * mhat / (std::sqrt(vhat) + hyper.eps);
        CHECK(p[0].item() == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK(std::abs(p[0].item()) < 0.5);
}

TEST_CASE("adam does not mutate inputs and repeats bit for bit") {
    num::Rng rng(5, "adam-purity");
    ParamSet p;
    p.add("p", random_matrix(rng, 2, 2));
    num::GradSet g({random_matrix(rng, 2, 2)});
    const auto state = num::AdamState::zeros_like(p);
    const ParamSet before = p;
    const auto a = num::adam_step(p, g, state, 0.1, 1);
    const auto b = num::adam_step(p, g, state, 0.1, 1);
    CHECK(oracle::bit_equal(p, before));
    CHECK(oracle::bit_equal(a.first, b.first));
    CHECK(a.second.first == b.second.first);
    CHECK(a.second.second == b.second.second);
}

TEST_CASE("rng streams are reproducible and independent") {
    num::Rng a(42, "alpha");
    num::Rng b(42, "alpha");
    num::Rng c(42, "beta");
    num::Rng d(43, "alpha");
    bool differs_c = false, differs_d = false;
    for (int i = 0; i < 64; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        differs_c |= x != c.next_u64();
        differs_d |= x != d.next_u64();
    }
    CHECK(differs_c);
    CHECK(differs_d);

    num::Rng parent(9, "root");
    const auto first = parent.split("child").next_u64();
    for (int i = 0; i < 10; ++i) parent.next_u64();
    CHECK(parent.split("child").next_u64() == first);
    CHECK(num::Rng(9, "root/child").next_u64() == first);
}

TEST_CASE("rng draws stay in range") {
    num::Rng rng(1, "range");
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const double u = rng.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        counts[rng.below(7)]++;
    }
    for (int c : counts) CHECK((c > 800 && c < 1200));
    std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7};
    rng.shuffle(std::span<int>(items));
    CHECK(std::set<int>(items.begin(), items.end()).size() == 8);
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / 20000) < 0.03);
    CHECK(std::abs(sq / 20000 - 1.0) < 0.05);
}
