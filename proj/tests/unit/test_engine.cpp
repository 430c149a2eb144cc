#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "../common/reductions.hpp"
#include "dsmm/engine/steps.hpp"
#include "dsmm/engine/trainer.hpp"
#include "dsmm/numerics/errors.hpp"
#include "dsmm/pairdata/synthetic.hpp"
#include "../common/oracle.hpp"

using namespace dsmm;
using reductions::all_families;
using reductions::tiny_kinship;

namespace {

struct Fixture {
    pairs::PairDataset data;
    std::vector<std::size_t> split;
    models::KinshipModel model;
    models::MetaMiner miner;
    pairs::Batch train_batch;
    pairs::Batch meta_batch;
    num::ParamSet theta;
    num::ParamSet phi;

    Fixture(std::uint64_t seed, std::size_t embed_dim, std::size_t hidden, std::size_t m, std::size_t c)
        : data(pairs::generate_synthetic({.families = 16, .dim = 4}, seed)),
          split(all_families(16)),
          model([&] {
              auto k = tiny_kinship(4);
              k.embed_dim = embed_dim;
              return k;
          }()),
          miner({.hidden = hidden}) {
        num::Rng rng(seed, "fixture");
        train_batch = pairs::sample_unbalanced_batch(split, {m, c}, rng);
        meta_batch = pairs::sample_balanced_batch(split, m, rng);
        theta = model.init(rng);
        phi = miner.init(rng);
        for (double& v : phi["miner.w1"].data()) v = rng.normal();
    }

    std::vector<double> raw_weights() const {
        const auto probe = engine::probe_samples(data, model, theta, train_batch.samples);
        return miner.weights(engine::miner_inputs(miner, probe), phi);
    }
};

double hand_bce(double p, int label) {
    return label == 1 ? -std::log(std::max(p, 1e-12)) : -std::log(std::max(1.0 - p, 1e-12));
}

}  // namespace

TEST_CASE("weighted bce hand example") {
    const std::vector<double> p{0.9, 0.4, 0.2};
    const std::vector<int> l{1, 0, 0};
    const std::vector<double> w{0.5, 1.0, 1.0};
    const double expected = (0.5 * -std::log(0.9) - std::log(0.6) - std::log(0.8)) / 3.0;
    CHECK(engine::weighted_bce(p, l, w, 1, 2) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(engine::weighted_bce(p, l, w, 1, 2) == doctest::Approx(0.2622165).epsilon(1e-7));
    CHECK(engine::weighted_bce(p, l, std::vector<double>(3, 0.0), 1, 2) == 0.0);
    CHECK_THROWS_AS(engine::weighted_bce(p, l, std::vector<double>(2, 1.0), 1, 2), ContractError);
}

TEST_CASE("weighted train loss with unit weights and C = 1 is the balanced BCE") {
    Fixture f(1, 4, 4, 3, 1);
    double expected = 0.0;
    for (const auto& s : f.train_batch.samples) {
        expected += hand_bce(f.model.predict(f.data.parent(s.parent), f.data.child(s.child), f.theta), s.label);
    }
    expected /= 6.0;
    const std::vector<double> ones(6, 1.0);
    CHECK(engine::weighted_train_loss(f.data, f.model, f.train_batch, f.theta, ones) ==
          doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("virtual step with alpha = 0 returns theta") {
    Fixture f(2, 4, 4, 2, 3);
    const auto before = f.theta;
    const auto hat = engine::virtual_step(f.data, f.model, f.miner, f.train_batch, f.theta, f.phi, 0.0);
    CHECK(oracle::bit_equal(hat, f.theta));
    CHECK(oracle::bit_equal(f.theta, before));
}

TEST_CASE("virtual step matches a hand-rolled SGD step") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Fixture f(seed, 4, 4, 2, 3);
        const double alpha = 0.3;
        const auto raw = f.raw_weights();
        const auto [value, grads] =
            num::value_and_grad(engine::weighted_train_loss_fn(f.data, f.model, f.train_batch, raw), f.theta);
        const auto expected = num::sgd_step(f.theta, grads, alpha);
        const auto hat = engine::virtual_step(f.data, f.model, f.miner, f.train_batch, f.theta, f.phi, alpha);
        num::GradSet diff = num::GradSet::zeros_like(f.theta);
        for (std::size_t t = 0; t < hat.size(); ++t)
            for (std::size_t k = 0; k < hat[t].size(); ++k) diff[t][k] = hat[t][k] - expected[t][k];
        CHECK(diff.max_abs() <= 1e-14);
    }
}

TEST_CASE("zero miner head gives half weights in the virtual step") {
    Fixture f(3, 4, 4, 2, 1);
    num::Rng head_rng(3, "zero-head");
    const auto phi = f.miner.init(head_rng);
    const std::vector<double> half(f.train_batch.size(), 0.5);
    const auto [value, grads] =
        num::value_and_grad(engine::weighted_train_loss_fn(f.data, f.model, f.train_batch, half), f.theta);
    const auto expected = num::sgd_step(f.theta, grads, 0.2);
    const auto hat = engine::virtual_step(f.data, f.model, f.miner, f.train_batch, f.theta, phi, 0.2);
    for (std::size_t t = 0; t < hat.size(); ++t)
        for (std::size_t k = 0; k < hat[t].size(); ++k) CHECK(hat[t][k] == doctest::Approx(expected[t][k]).epsilon(1e-13));
}

TEST_CASE("meta loss") {
    Fixture f(4, 4, 4, 2, 1);
    CHECK(engine::meta_loss(f.data, f.model, f.meta_batch, f.model.zeros()) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
    double expected = 0.0;
    for (const auto& s : f.meta_batch.samples) {
        expected += hand_bce(f.model.predict(f.data.parent(s.parent), f.data.child(s.child), f.theta), s.label);
    }
    CHECK(engine::meta_loss(f.data, f.model, f.meta_batch, f.theta) == doctest::Approx(expected / 4.0).epsilon(1e-13));
    const Fixture unbalanced(4, 4, 4, 2, 3);
    CHECK_THROWS_AS(engine::meta_loss(f.data, f.model, unbalanced.train_batch, f.theta), ContractError);
    // Near-perfect predictions, scored through the same scalar loss.
    CHECK(engine::weighted_bce(std::vector<double>{1.0 - 1e-13, 1.0, 0.0, 1e-13}, std::vector<int>{1, 1, 0, 0},
                               std::vector<double>(4, 1.0), 2, 1) < 1e-12);
}

TEST_CASE("meta gradient vanishes for alpha = 0") {
    Fixture f(5, 4, 4, 2, 3);
    const auto g = engine::meta_gradient(f.data, f.model, f.miner, f.train_batch, f.meta_batch, f.theta, f.phi, 0.0);
    CHECK(g.max_abs() == 0.0);
}

TEST_CASE("meta gradient vanishes when the meta gradient is orthogonal to every sample gradient") {
    Fixture f(6, 4, 4, 2, 1);
    auto probe = engine::probe_samples(f.data, f.model, f.theta, f.train_batch.samples);
    // Keep only the first tensor of each sample gradient; the meta gradient lives in the second.
    for (auto& g : probe.grads)
        for (std::size_t t = 1; t < g.size(); ++t)
            for (double& v : g[t].data()) v = 0.0;
    auto meta = num::GradSet::zeros_like(f.theta);
    for (double& v : meta[1].data()) v = 1.0;
    const auto inputs = engine::miner_inputs(f.miner, probe);
    CHECK(engine::meta_gradient(probe, f.miner, inputs, f.phi, meta, 0.5, 4).max_abs() == 0.0);
}

TEST_CASE("meta gradient matches central differences of the bilevel objective") {
    struct Setup {
        std::size_t d, h, c;
    };
    std::uint64_t seed = 100;
    for (const auto s : {Setup{8, 4, 3}, Setup{2, 8, 1}, Setup{4, 4, 1}, Setup{8, 8, 1}, Setup{4, 8, 3}}) {
        CAPTURE(s.d);
        CAPTURE(s.c);
        Fixture f(seed++, s.d, s.h, 2, s.c);
        const double alpha = 0.5;
        const auto analytic =
            engine::meta_gradient(f.data, f.model, f.miner, f.train_batch, f.meta_batch, f.theta, f.phi, alpha);
        const auto numeric = oracle::central_diff(
            [&](const num::ParamSet& phi) {
                return engine::meta_loss(
                    f.data, f.model, f.meta_batch,
                    engine::virtual_step(f.data, f.model, f.miner, f.train_batch, f.theta, phi, alpha));
            },
            f.phi, 1e-4);
        const double scale = std::max(analytic.max_abs(), numeric.max_abs());
        CHECK(scale > 0.0);
        CHECK(oracle::worst_ratio(analytic, numeric, 1e-4, 1e-6 * scale) <= 1.0);
    }
}

TEST_CASE("normalize weights") {
    const auto quarter = engine::normalize_weights(std::vector<double>(4, 0.5));
    for (double w : quarter.normalized) CHECK(w == 0.25);
    CHECK(!quarter.fell_back);
    const auto prop = engine::normalize_weights(std::vector<double>{0.8, 0.4, 0.8});
    CHECK(prop.normalized[0] == doctest::Approx(0.4));
    CHECK(prop.normalized[1] == doctest::Approx(0.2));
    CHECK(prop.normalized[2] == doctest::Approx(0.4));

    const auto tiny = engine::normalize_weights(std::vector<double>{1e-14, 0.0, 1e-15});
    CHECK(tiny.fell_back);
    for (double w : tiny.normalized) CHECK(w == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(engine::normalize_weights(std::vector<double>{0.5, -0.1}), ContractError);
}

TEST_CASE("normalized weights sum to one and keep their order") {
    num::Rng rng(7, "normalize");
    for (int t = 0; t < 200; ++t) {
        std::vector<double> raw(1 + rng.below(40));
        for (double& r : raw) r = rng.uniform();
        const auto w = engine::normalize_weights(raw);
        double sum = 0.0;
        for (double v : w.normalized) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (std::size_t i = 0; i < raw.size(); ++i)
            for (std::size_t j = 0; j < raw.size(); ++j)
                if (raw[i] < raw[j]) CHECK(w.normalized[i] <= w.normalized[j]);
    }
}

TEST_CASE("actual step") {
    Fixture f(8, 4, 4, 2, 1);
    const std::vector<double> uniform(4, 0.25);
    for (auto kind : {engine::Optimizer::sgd, engine::Optimizer::adam}) {
        const auto state = engine::OptimizerState::fresh(kind, f.theta);
        const auto same = engine::actual_step(f.data, f.model, f.train_batch, f.theta, uniform, 0.0, state);
        CHECK(oracle::bit_equal(same.params, f.theta));
    }

    // Uniform weights with C = 1: one unweighted balanced step at rate gamma / (2m).
    const auto sgd = engine::OptimizerState::fresh(engine::Optimizer::sgd, f.theta);
    const auto step = engine::actual_step(f.data, f.model, f.train_batch, f.theta, uniform, 0.8, sgd);
    const auto [v, balanced] = num::value_and_grad(
        engine::weighted_train_loss_fn(f.data, f.model, f.train_batch, std::vector<double>(4, 1.0)), f.theta);
    const auto expected = num::sgd_step(f.theta, balanced, 0.8 / 4.0);
    for (std::size_t t = 0; t < f.theta.size(); ++t)
        for (std::size_t k = 0; k < f.theta[t].size(); ++k)
            CHECK(step.params[t][k] == doctest::Approx(expected[t][k]).epsilon(1e-13));

    // Adam: matches adam_step on the hand-built gradient.
    const std::vector<double> w{0.1, 0.4, 0.3, 0.2};
    const auto adam = engine::OptimizerState::fresh(engine::Optimizer::adam, f.theta);
    const auto adam_out = engine::actual_step(f.data, f.model, f.train_batch, f.theta, w, 0.01, adam);
    const auto [v2, g2] = num::value_and_grad(engine::weighted_train_loss_fn(f.data, f.model, f.train_batch, w), f.theta);
    const auto [ref, ref_state] = num::adam_step(f.theta, g2, adam.adam, 0.01, 1);
    CHECK(adam_out.state.steps == 1);
    for (std::size_t t = 0; t < f.theta.size(); ++t)
        for (std::size_t k = 0; k < f.theta[t].size(); ++k)
            CHECK(adam_out.params[t][k] == doctest::Approx(ref[t][k]).epsilon(1e-12));
}

TEST_CASE("focal with gamma 0 equals BCE") {
    CHECK(reductions::focal_zero_gap(1) <= 1e-12);
    CHECK(reductions::focal_zero_gap(2) <= 1e-12);
}

TEST_CASE("unbalance_const with C = 1 equals the balanced loss") {
    CHECK(reductions::unbalance_const_c1_gap(3) <= 1e-12);
}

TEST_CASE("baseline weights and losses") {
    Fixture f(9, 4, 4, 2, 3);
    const auto w = engine::baseline_weights(f.train_batch, engine::Strategy::unbalance_const);
    for (std::size_t i = 0; i < w.size(); ++i)
        CHECK(w[i] == (f.train_batch.samples[i].label == 1 ? 1.0 : 1.0 / 3.0));
    engine::TrainConfig cfg;
    cfg.kinship = f.model.config();
    double expected = 0.0;
    for (const auto& s : f.train_batch.samples) {
        const double p = f.model.predict(f.data.parent(s.parent), f.data.child(s.child), f.theta);
        const double pt = s.label == 1 ? p : 1.0 - p;
        expected += -(1.0 - pt) * (1.0 - pt) * std::log(pt);
    }
    CHECK(engine::baseline_loss(f.data, f.model, f.train_batch, f.theta, engine::Strategy::focal_unbalance, cfg) ==
          doctest::Approx(expected / 8.0).epsilon(1e-13));
}

TEST_CASE("constant miner reproduces the unweighted trajectory bit for bit") {
    const auto check = reductions::constant_miner_trajectory(5, 3);
    CHECK(check.iterations == 9);
    CHECK(check.mismatches == 0);
}

TEST_CASE("train: history, determinism and per-iteration invariants") {
    const auto data = pairs::generate_synthetic({.families = 20, .dim = 4}, 11);
    const auto split = all_families(20);
    engine::TrainConfig cfg;
    cfg.kinship = tiny_kinship(4);
    cfg.miner.hidden = 6;
    cfg.positives = 4;
    cfg.ratio = 3;
    cfg.epochs = 3;
    cfg.beta = 0.01;
    cfg.seed = 4;
    const models::KinshipModel model(cfg.kinship);

    std::size_t iterations = 0;
    engine::TrainHooks hooks;
    hooks.on_iteration = [&](const engine::IterationTrace& t) {
        ++iterations;
        // The virtual step left theta alone: predictions recomputed now equal the probe's.
        const auto again = engine::predict_pairs(data, model, *t.theta_before, t.train_batch->samples);
        CHECK(std::equal(again.begin(), again.end(), t.predictions_before.begin(), t.predictions_before.end()));
        double sum = 0.0;
        for (double w : t.normalized_weights) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    };
    const auto a = engine::train(data, split, cfg, hooks);
    CHECK(iterations == 15);
    REQUIRE(a.history.size() == 3);
    for (const auto& r : a.history) {
        CHECK((r.pos_weight_ratio >= 0.0 && r.pos_weight_ratio <= 1.0));
        CHECK(std::isfinite(r.meta_loss));
    }
    CHECK(a.history[0].pos_weight_ratio == doctest::Approx(0.25).epsilon(0.05));
    const auto b = engine::train(data, split, cfg);
    CHECK(oracle::bit_equal(a.theta, b.theta));
    CHECK(oracle::bit_equal(*a.phi, *b.phi));
    cfg.seed = 5;
    CHECK(!oracle::bit_equal(a.theta, engine::train(data, split, cfg).theta));
}

TEST_CASE("baselines allocate no miner and record NaN meta loss") {
    const auto data = pairs::generate_synthetic({.families = 20, .dim = 4}, 12);
    engine::TrainConfig cfg;
    cfg.kinship = tiny_kinship(4);
    cfg.positives = 4;
    cfg.ratio = 2;
    cfg.epochs = 2;
    for (auto s : {engine::Strategy::balance_batch, engine::Strategy::unbalance_const, engine::Strategy::focal_balance,
                   engine::Strategy::focal_unbalance, engine::Strategy::fixed_dataset}) {
        cfg.strategy = s;
        const auto state = engine::train(data, all_families(20), cfg);
        CHECK(!state.phi.has_value());
        REQUIRE(state.history.size() == 2);
        CHECK(std::isnan(state.history[0].meta_loss));
        const double expected_ratio = s == engine::Strategy::unbalance_const ? 0.5
                                      : s == engine::Strategy::focal_unbalance ? 1.0 / 3.0
                                                                               : 0.5;
        CHECK(state.history[0].pos_weight_ratio == doctest::Approx(expected_ratio));
    }
}

TEST_CASE("learning-rate milestones") {
    engine::TrainConfig cfg;
    cfg.epochs = 200;
    CHECK(engine::effective_milestones(cfg) == std::vector<std::size_t>{100, 150});
    CHECK(engine::learning_rate_at(cfg, 99) == cfg.gamma);
    CHECK(engine::learning_rate_at(cfg, 100) == doctest::Approx(cfg.gamma * 0.1));
    CHECK(engine::learning_rate_at(cfg, 150) == doctest::Approx(cfg.gamma * 0.01));
    cfg.epochs = 1;
    CHECK(engine::effective_milestones(cfg).empty());
}

TEST_CASE("invalid training configs list every problem") {
    engine::TrainConfig cfg;
    cfg.alpha = -1.0;
    cfg.epochs = 0;
    cfg.positives = 0;
    CHECK(engine::validate(cfg).size() == 3);
}

TEST_CASE("training failures carry the iteration") {
    const auto data = pairs::generate_synthetic({.families = 10, .dim = 4}, 13);
    engine::TrainConfig cfg;
    cfg.kinship = tiny_kinship(4);
    cfg.positives = 2;
    cfg.epochs = 2;
    cfg.gamma = 1e300;
    cfg.actual_optimizer = engine::Optimizer::sgd;
    try {
        engine::train(data, all_families(10), cfg);
        FAIL("expected a numeric failure");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}
