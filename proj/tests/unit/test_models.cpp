#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dsmm/models/checkpoint.hpp"
#include "dsmm/models/kinship.hpp"
#include "dsmm/models/miner.hpp"
#include "dsmm/numerics/errors.hpp"
#include "../common/oracle.hpp"

using namespace dsmm;
using models::Activation;
using num::Graph;
using num::ParamSet;
using num::ParamVars;
using num::Tensor;

namespace {

std::vector<double> random_vector(num::Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

double act(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        default: return x;
    }
}

// y = act(x W + b), loops only.
std::vector<double> dense(const std::vector<double>& x, const Tensor& w, const Tensor& b, Activation a) {
    std::vector<double> y(w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) {
        double s = b[j];
        for (std::size_t i = 0; i < w.rows(); ++i) s += x[i] * w.at(i, j);
        y[j] = act(a, s);
    }
    return y;
}

std::vector<double> hand_mlp(std::vector<double> x, const ParamSet& p, const std::string& prefix, std::size_t layers,
                             Activation hidden, Activation out) {
    for (std::size_t l = 0; l < layers; ++l) {
        x = dense(x, p[prefix + ".w" + std::to_string(l)], p[prefix + ".b" + std::to_string(l)],
                  l + 1 == layers ? out : hidden);
    }
    return x;
}

double hand_predict(const models::KinshipModel& model, const ParamSet& theta, const std::vector<double>& x,
                    const std::vector<double>& y) {
    const auto& c = model.config();
    const std::size_t enc_layers = c.encoder_hidden.size() + 1;
    const auto ex = hand_mlp(x, theta, "enc", enc_layers, c.encoder_hidden_act, c.encoder_output_act);
    const auto ey = hand_mlp(y, theta, "enc", enc_layers, c.encoder_hidden_act, c.encoder_output_act);
    std::vector<double> joined;
    for (std::size_t i = 0; i < c.embed_dim; ++i) {
        const auto r = hand_mlp({ex[i], ey[i]}, theta, "rel", c.relation_hidden.size() + 1, Activation::relu,
                                Activation::relu);
        joined.insert(joined.end(), r.begin(), r.end());
    }
    return hand_mlp(joined, theta, "agg", c.aggregator_hidden.size() + 1, Activation::relu, Activation::sigmoid)[0];
}

models::KinshipConfig small_config() {
    models::KinshipConfig c;
    c.input_dim = 5;
    c.encoder_hidden = {6};
    c.embed_dim = 4;
    c.relation_hidden = {3};
    c.relation_out = 2;
    c.aggregator_hidden = {5};
    return c;
}

}  // namespace

TEST_CASE("zero parameters give a zero embedding and p = 0.5") {
    const models::KinshipModel model(small_config());
    const auto theta = model.zeros();
    num::Rng rng(1, "x");
    const auto x = random_vector(rng, 5);
    for (double e : model.encode(x, theta)) CHECK(e == 0.0);
    CHECK(model.predict(x, random_vector(rng, 5), theta) == 0.5);
}

TEST_CASE("identity single-layer relu encoder passes nonnegative inputs through") {
    models::KinshipConfig c;
    c.input_dim = 3;
    c.encoder_hidden = {};
    c.embed_dim = 3;
    c.encoder_output_act = Activation::relu;
    const models::KinshipModel model(c);
    auto theta = model.zeros();
    for (std::size_t i = 0; i < 3; ++i) theta["enc.w0"].at(i, i) = 1.0;
    const std::vector<double> x{0.0, 1.5, 2.25};
    CHECK(model.encode(x, theta) == x);
}

TEST_CASE("forward matches a hand-evaluated composition") {
    const models::KinshipModel model(small_config());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        num::Rng rng(seed, "hand");
        const auto theta = model.init(rng);
        const auto x = random_vector(rng, 5);
        const auto y = random_vector(rng, 5);
        const double p = model.predict(x, y, theta);
        CHECK(p == doctest::Approx(hand_predict(model, theta, x, y)).epsilon(1e-12));
        CHECK((p > 0.0 && p < 1.0));
        const auto ex = model.encode(x, theta);
        const auto hand_ex = hand_mlp(x, theta, "enc", 2, Activation::relu, Activation::linear);
        for (std::size_t i = 0; i < ex.size(); ++i) CHECK(ex[i] == doctest::Approx(hand_ex[i]).epsilon(1e-12));
    }
}

TEST_CASE("D = 2, k = 1 with hand-set weights") {
    models::KinshipConfig c;
    c.input_dim = 2;
    c.encoder_hidden = {};
    c.embed_dim = 2;
    c.relation_hidden = {};
    c.relation_out = 1;
    c.aggregator_hidden = {};
    const models::KinshipModel model(c);
    auto theta = model.zeros();
    // Encoder: identity. h(a, b) = relu(2a - b + 0.5). r(z) = sigmoid(z0 - 3 z1 + 0.25).
    theta["enc.w0"].at(0, 0) = 1.0;
    theta["enc.w0"].at(1, 1) = 1.0;
    theta["rel.w0"].at(0, 0) = 2.0;
    theta["rel.w0"].at(1, 0) = -1.0;
    theta["rel.b0"][0] = 0.5;
    theta["agg.w0"].at(0, 0) = 1.0;
    theta["agg.w0"].at(1, 0) = -3.0;
    theta["agg.b0"][0] = 0.25;
    const std::vector<double> x{0.3, 0.1};
    const std::vector<double> y{0.2, 0.4};
    const double h0 = std::max(0.0, 2 * 0.3 - 0.2 + 0.5);  // 0.9
    const double h1 = std::max(0.0, 2 * 0.1 - 0.4 + 0.5);  // 0.3
    const double expected = 1.0 / (1.0 + std::exp(-(h0 - 3 * h1 + 0.25)));
    CHECK(model.predict(x, y, theta) == doctest::Approx(expected).epsilon(1e-14));
    // Parent and child roles differ.
    CHECK(model.predict(y, x, theta) != doctest::Approx(expected));
}

TEST_CASE("zero aggregator gives p = 0.5 for any encoder") {
    const models::KinshipModel model(small_config());
    num::Rng rng(2, "agg");
    auto theta = model.init(rng);
    for (const auto& name : {"agg.w0", "agg.b0", "agg.w1", "agg.b1"}) {
        for (double& v : theta[name].data()) v = 0.0;
    }
    CHECK(model.predict(random_vector(rng, 5), random_vector(rng, 5), theta) == 0.5);
}

TEST_CASE("length mismatches are contract errors") {
    const models::KinshipModel model(small_config());
    const auto theta = model.zeros();
    CHECK_THROWS_AS(model.encode(std::vector<double>(4), theta), ContractError);
    CHECK_THROWS_AS(model.predict(std::vector<double>(5), std::vector<double>(6), theta), ContractError);
    ParamSet wrong;
    wrong.add("enc.w0", Tensor::matrix(1, 1));
    CHECK_THROWS_AS(model.check_params(wrong), ContractError);
}

TEST_CASE("kinship gradient matches central differences") {
    const models::KinshipModel model(small_config());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        num::Rng rng(seed, "kin-grad");
        auto theta = model.init(rng);
        // Zero biases can sit exactly on a relu kink; move to a generic point.
        for (std::size_t t = 0; t < theta.size(); ++t) {
            for (double& v : theta[t].data()) v += 0.1 * rng.normal();
        }
        auto x = Tensor::matrix(3, 5);
        auto y = Tensor::matrix(3, 5);
        for (double& v : x.data()) v = rng.normal();
        for (double& v : y.data()) v = rng.normal();
        const std::vector<int> labels{1, 0, 1};
        auto loss = [&](Graph& g, const ParamVars& p) {
            const auto probs = model.forward(g, p, g.constant(x), g.constant(y));
            return g.mean(models::bce_per_sample(g, probs, labels));
        };
        const auto [value, grads] = num::value_and_grad(loss, theta);
        CHECK(oracle::worst_ratio(grads, oracle::central_diff(loss, theta, 1e-5), 1e-6, 1e-9) <= 1.0);
    }
}

TEST_CASE("miner gradient matches central differences") {
    const models::MetaMiner miner({.hidden = 6, .hidden_act = Activation::tanh, .loss_cap = 10.0});
    num::Rng rng(4, "miner-grad");
    auto phi = miner.init(rng);
    for (double& v : phi["miner.w1"].data()) v = rng.normal();
    const auto inputs = miner.inputs(std::vector<int>{1, 0, 0}, std::vector<double>{0.7, 0.2, 0.9},
                                     std::vector<double>{0.35, 0.22, 2.3});
    auto loss = [&](Graph& g, const ParamVars& p) { return g.sum(miner.forward(g, p, g.constant(inputs))); };
    const auto [value, grads] = num::value_and_grad(loss, phi);
    CHECK(oracle::worst_ratio(grads, oracle::central_diff(loss, phi, 1e-5), 1e-6, 1e-9) <= 1.0);
}

TEST_CASE("permuting input features with the first encoder layer leaves p unchanged") {
    const models::KinshipModel model(small_config());
    num::Rng rng(8, "perm");
    const auto theta = model.init(rng);
    const auto x = random_vector(rng, 5);
    const auto y = random_vector(rng, 5);
    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    auto px = x, py = y;
    auto ptheta = theta;
    for (std::size_t i = 0; i < 5; ++i) {
        px[i] = x[perm[i]];
        py[i] = y[perm[i]];
        for (std::size_t j = 0; j < theta["enc.w0"].cols(); ++j) {
            ptheta["enc.w0"].at(i, j) = theta["enc.w0"].at(perm[i], j);
        }
    }
    CHECK(model.predict(px, py, ptheta) == doctest::Approx(model.predict(x, y, theta)).epsilon(1e-13));
}

TEST_CASE("permuting embedding coordinates with the aggregator blocks leaves p unchanged") {
    // The relation unit is shared across coordinates, so moving coordinate
    // perm[i] to slot i only requires moving the matching aggregator rows.
    const auto c = small_config();
    const models::KinshipModel model(c);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        num::Rng rng(seed, "embed-perm");
        const auto theta = model.init(rng);
        std::vector<std::size_t> perm(c.embed_dim);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span<std::size_t>(perm));
        auto ptheta = theta;
        const auto& w = theta["enc.w1"];
        for (std::size_t i = 0; i < c.embed_dim; ++i) {
            for (std::size_t r = 0; r < w.rows(); ++r) ptheta["enc.w1"].at(r, i) = w.at(r, perm[i]);
            ptheta["enc.b1"][i] = theta["enc.b1"][perm[i]];
            for (std::size_t q = 0; q < c.relation_out; ++q) {
                for (std::size_t col = 0; col < theta["agg.w0"].cols(); ++col) {
                    ptheta["agg.w0"].at(i * c.relation_out + q, col) =
                        theta["agg.w0"].at(perm[i] * c.relation_out + q, col);
                }
            }
        }
        const auto x = random_vector(rng, c.input_dim);
        const auto y = random_vector(rng, c.input_dim);
        CHECK(model.predict(x, y, ptheta) == doctest::Approx(model.predict(x, y, theta)).epsilon(1e-13));
    }
}

TEST_CASE("bce per sample") {
    CHECK(models::bce_per_sample(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(models::bce_per_sample(0.5, 0) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(models::bce_per_sample(0.9, 0) == doctest::Approx(2.302585).epsilon(1e-6));
    CHECK(models::bce_per_sample(1.0 - 1e-15, 1) < 1e-14);
    CHECK(models::bce_per_sample(0.0, 1) == doctest::Approx(-std::log(num::kLogFloor)));
    double prev_pos = INFINITY, prev_neg = -INFINITY;
    for (int i = 1; i < 100; ++i) {
        const double p = i / 100.0;
        const double pos = models::bce_per_sample(p, 1);
        const double neg = models::bce_per_sample(p, 0);
        CHECK(pos < prev_pos);
        CHECK(neg > prev_neg);
        CHECK(pos >= 0.0);
        prev_pos = pos;
        prev_neg = neg;
    }
}

TEST_CASE("focal per sample") {
    CHECK(models::focal_per_sample(0.5, 1, 2.0) == doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-15));
    CHECK(models::focal_per_sample(0.5, 1, 2.0) == doctest::Approx(0.173287).epsilon(1e-5));
    for (double p : {0.1, 0.37, 0.8}) {
        for (int label : {0, 1}) {
            CHECK(std::abs(models::focal_per_sample(p, label, 0.0) - models::bce_per_sample(p, label)) <= 1e-12);
        }
    }
}

TEST_CASE("miner weights") {
    const models::MetaMiner miner({});
    const auto zero = miner.zeros();
    CHECK(miner.weight(1, 0.3, 1.2, zero) == 0.5);
    num::Rng rng(6, "miner-init");
    const auto init = miner.init(rng);
    CHECK(miner.weight(0, 0.9, 2.3, init) == 0.5);
    auto phi = init;
    for (double& v : phi["miner.w1"].data()) v = 3.0 * rng.normal();
    for (int i = 0; i < 50; ++i) {
        const double w = miner.weight(i % 2, rng.uniform(), 5.0 * rng.uniform(), phi);
        CHECK((w > 0.0 && w < 1.0));
    }
}

TEST_CASE("miner H = 2 with hand-set weights") {
    const models::MetaMiner miner({.hidden = 2, .hidden_act = Activation::relu, .loss_cap = 1.0});
    auto phi = miner.zeros();
    // hidden0 = relu(label - pred), hidden1 = relu(loss - 0.2); out = sigmoid(hidden0 - 2 hidden1 + 0.1)
    phi["miner.w0"].at(0, 0) = 1.0;
    phi["miner.w0"].at(1, 0) = -1.0;
    phi["miner.w0"].at(2, 1) = 1.0;
    phi["miner.b0"][1] = -0.2;
    phi["miner.w1"].at(0, 0) = 1.0;
    phi["miner.w1"].at(1, 0) = -2.0;
    phi["miner.b1"][0] = 0.1;
    auto expected = [](double label, double pred, double loss) {
        const double h0 = std::max(0.0, label - pred);
        const double h1 = std::max(0.0, loss - 0.2);
        return 1.0 / (1.0 + std::exp(-(h0 - 2.0 * h1 + 0.1)));
    };
    CHECK(miner.weight(1, 0.3, 0.5, phi) == doctest::Approx(expected(1, 0.3, 0.5)).epsilon(1e-15));
    // Loss is capped at 1.0 before entering the network.
    CHECK(miner.weight(0, 0.8, 4.0, phi) == doctest::Approx(expected(0, 0.8, 1.0)).epsilon(1e-15));
}

TEST_CASE("checkpoint round trip is bit exact") {
    const models::KinshipModel model(small_config());
    const models::MetaMiner miner({.hidden = 5, .hidden_act = Activation::tanh, .loss_cap = 3.0});
    num::Rng rng(12, "ckpt");
    models::Checkpoint ck{small_config(), model.init(rng), miner.config(), miner.init(rng)};
    for (double& v : ck.phi["miner.w1"].data()) v = rng.normal() / 3.0;
    const auto back = models::checkpoint_from_json(nlohmann::json::parse(models::to_json(ck).dump()));
    CHECK(back.kinship == ck.kinship);
    CHECK(back.miner == ck.miner);
    CHECK(oracle::bit_equal(back.theta, ck.theta));
    CHECK(oracle::bit_equal(back.phi, ck.phi));

    auto doc = models::to_json(ck);
    doc["kinship"]["embed_dim"] = 7;
    CHECK_THROWS_AS(models::checkpoint_from_json(doc), ContractError);
}
