#include "dsmm/engine/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dsmm/metrics/metrics.hpp"
#include "dsmm/numerics/errors.hpp"

namespace dsmm::engine {

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::dsmm:
            return "dsmm";
        case Strategy::balance_batch:
            return "balance_batch";
        case Strategy::unbalance_const:
            return "unbalance_const";
        case Strategy::focal_balance:
            return "focal_balance";
        case Strategy::focal_unbalance:
            return "focal_unbalance";
        case Strategy::fixed_dataset:
            return "fixed_dataset";
    }
    return "dsmm";
}

Strategy parse_strategy(std::string_view text) {
    for (Strategy s : {Strategy::dsmm, Strategy::balance_batch, Strategy::unbalance_const, Strategy::focal_balance,
                       Strategy::focal_unbalance, Strategy::fixed_dataset}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    throw ContractError("unknown strategy '" + std::string(text) + "'");
}

std::vector<std::string> validate(const TrainConfig& c) {
    std::vector<std::string> errors;
    if (!(c.alpha > 0.0)) errors.push_back("alpha must be > 0");
    if (!(c.beta > 0.0)) errors.push_back("beta must be > 0");
    if (!(c.gamma > 0.0)) errors.push_back("gamma must be > 0");
    if (c.ratio < 1) errors.push_back("c must be >= 1");
    if (c.positives < 1) errors.push_back("m must be >= 1");
    if (c.epochs < 1) errors.push_back("epochs must be >= 1");
    if (!(c.lr_decay > 0.0)) errors.push_back("lr_decay must be > 0");
    if (!(c.focal_gamma >= 0.0)) errors.push_back("focal_gamma must be >= 0");
    for (std::size_t i = 1; i < c.milestones.size(); ++i) {
        if (c.milestones[i] <= c.milestones[i - 1]) {
            errors.push_back("milestones must be strictly increasing");
            break;
        }
    }
    return errors;
}

std::vector<std::size_t> effective_milestones(const TrainConfig& config) {
    if (!config.milestones.empty()) {
        return config.milestones;
    }
    std::vector<std::size_t> out;
    for (std::size_t m : {config.epochs / 2, (3 * config.epochs) / 4}) {
        if (m > 0 && m < config.epochs && (out.empty() || out.back() != m)) {
            out.push_back(m);
        }
    }
    return out;
}

double learning_rate_at(const TrainConfig& config, std::size_t epoch) {
    double lr = config.gamma;
    for (std::size_t milestone : effective_milestones(config)) {
        if (epoch >= milestone) {
            lr *= config.lr_decay;
        }
    }
    return lr;
}

std::vector<double> baseline_weights(const pairs::Batch& batch, Strategy strategy) {
    std::vector<double> weights(batch.size(), 1.0);
    if (strategy == Strategy::unbalance_const) {
        const double negative_weight = 1.0 / static_cast<double>(batch.ratio);
        for (std::size_t s = 0; s < batch.size(); ++s) {
            if (batch.samples[s].label == 0) {
                weights[s] = negative_weight;
            }
        }
    }
    return weights;
}

double baseline_loss(const pairs::PairDataset& data, const models::KinshipModel& model, const pairs::Batch& batch,
                     const num::ParamSet& theta, Strategy strategy, const TrainConfig& config) {
    require(strategy != Strategy::dsmm, "baseline_loss: dsmm is not a baseline strategy");
    const bool balanced = strategy == Strategy::balance_batch || strategy == Strategy::focal_balance ||
                          strategy == Strategy::fixed_dataset;
    if (balanced) {
        check_balanced(batch);
    }
    const double normalizer = static_cast<double>(batch_normalizer(batch));
    const bool focal = strategy == Strategy::focal_balance || strategy == Strategy::focal_unbalance;
    const auto predictions = predict_pairs(data, model, theta, batch.samples);
    const auto weights = baseline_weights(batch, strategy);
    double total = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const int label = batch.samples[s].label;
        const double loss = focal ? models::focal_per_sample(predictions[s], label, config.focal_gamma)
                                  : models::bce_per_sample(predictions[s], label);
        total += weights[s] * loss;
    }
    return total / normalizer;
}

std::vector<double> predict_pairs(const pairs::PairDataset& data, const models::KinshipModel& model,
                                  const num::ParamSet& theta, std::span<const pairs::PairSample> pairs) {
    return model.predict(pairs::parent_features(data, pairs), pairs::child_features(data, pairs), theta);
}

namespace {

// One-time balanced pair set for the fixed_dataset baseline: every positive of
// the split plus as many random negatives.
struct FixedPairs {
    std::vector<pairs::PairSample> positives;
    std::vector<pairs::PairSample> negatives;

    pairs::Batch draw(std::size_t m, num::Rng& rng) const {
        pairs::Batch batch;
        batch.positives = m;
        batch.ratio = 1;
        for (const auto* pool : {&positives, &negatives}) {
            std::vector<std::size_t> idx(pool->size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
                std::swap(idx[i], idx[j]);
                batch.samples.push_back((*pool)[idx[i]]);
            }
        }
        rng.shuffle(std::span<pairs::PairSample>(batch.samples));
        return batch;
    }
};

struct EpochAccumulator {
    double train_loss = 0.0;
    double meta_loss = 0.0;
    double ratio = 0.0;
    double accuracy = 0.0;
    std::size_t count = 0;
};

double mean_bce(const SampleProbe& probe) {
    double total = 0.0;
    for (std::size_t s = 0; s < probe.size(); ++s) {
        total += models::bce_per_sample(probe.predictions[s], probe.labels[s]);
    }
    return total / static_cast<double>(probe.size());
}

}  // namespace

TrainState train(const pairs::PairDataset& data, std::span<const std::size_t> split, const TrainConfig& config,
                 const TrainHooks& hooks) {
    const auto errors = validate(config);
    if (!errors.empty()) {
        std::string message = "invalid training config:";
        for (const auto& e : errors) message += " " + e + ";";
        throw ContractError(message);
    }
    require(config.kinship.input_dim == data.dim(), "kinship input_dim " + std::to_string(config.kinship.input_dim) +
                                                        " does not match dataset dimension " +
                                                        std::to_string(data.dim()));
    for (std::size_t family : split) {
        require(family < data.families(), "split references a family outside the dataset");
    }
    const Strategy strategy = config.strategy;
    const bool unbalanced = strategy == Strategy::dsmm || strategy == Strategy::unbalance_const ||
                            strategy == Strategy::focal_unbalance;
    pairs::check_budget(split.size(), {config.positives, unbalanced ? config.ratio : 1});

    const models::KinshipModel model(config.kinship);
    const models::MetaMiner miner(config.miner);
    const num::Rng root(config.seed, "train");

    TrainState state;
    {
        num::Rng init = root.split("init/theta");
        state.theta = model.init(init);
    }
    state.theta_optimizer = OptimizerState::fresh(config.actual_optimizer, state.theta);
    if (strategy == Strategy::dsmm) {
        num::Rng init = root.split("init/phi");
        state.phi = miner.init(init);
        state.phi_optimizer = OptimizerState::fresh(config.meta_optimizer, *state.phi);
    }

    num::Rng train_rng = root.split("batches/train");
    num::Rng meta_rng = root.split("batches/meta");

    FixedPairs fixed;
    if (strategy == Strategy::fixed_dataset) {
        num::Rng fixed_rng = root.split("fixed_dataset");
        for (std::size_t family : split) {
            fixed.positives.push_back({family, family, 1});
        }
        auto all = pairs::evaluation_pairs(split, fixed_rng);
        fixed.negatives.assign(all.begin() + static_cast<std::ptrdiff_t>(split.size()), all.end());
    }

    const bool focal = strategy == Strategy::focal_balance || strategy == Strategy::focal_unbalance;
    const SampleLoss sample_loss = focal ? SampleLoss::focal : SampleLoss::bce;
    const std::size_t iterations = pairs::iterations_per_epoch(split.size(), config.positives);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = learning_rate_at(config, epoch);
        EpochAccumulator acc;
        for (std::size_t it = 0; it < iterations; ++it, ++state.iteration) {
            try {
                pairs::Batch batch;
                switch (strategy) {
                    case Strategy::dsmm:
                    case Strategy::unbalance_const:
                    case Strategy::focal_unbalance:
                        batch = pairs::sample_unbalanced_batch(split, {config.positives, config.ratio}, train_rng);
                        break;
                    case Strategy::balance_batch:
                    case Strategy::focal_balance:
                        batch = pairs::sample_balanced_batch(split, config.positives, train_rng);
                        break;
                    case Strategy::fixed_dataset:
                        batch = fixed.draw(config.positives, train_rng);
                        break;
                }
                const std::size_t normalizer = batch_normalizer(batch);
                const SampleProbe probe =
                    probe_samples(data, model, state.theta, batch.samples, sample_loss, config.focal_gamma);

                acc.train_loss += mean_bce(probe);
                acc.accuracy += metrics::accuracy(probe.predictions, probe.labels, 0.5);
                acc.count += 1;

                if (strategy == Strategy::dsmm) {
                    const pairs::Batch meta_batch = pairs::sample_balanced_batch(split, config.positives, meta_rng);
                    const num::Tensor inputs = miner_inputs(miner, probe);
                    const auto raw = miner.weights(inputs, *state.phi);
                    const num::ParamSet theta_hat = virtual_step(probe, state.theta, raw, config.alpha, normalizer);
                    const auto [meta_value, meta_grad_theta] = meta_loss_and_grad(data, model, meta_batch, theta_hat);
                    acc.meta_loss += meta_value;
                    if (!config.freeze_miner) {
                        const num::GradSet meta_grad = meta_gradient(probe, miner, inputs, *state.phi, meta_grad_theta,
                                                                     config.alpha, normalizer);
                        StepResult miner_step = optimizer_step(*state.phi, meta_grad, config.beta, *state.phi_optimizer);
                        state.phi = std::move(miner_step.params);
                        state.phi_optimizer = std::move(miner_step.state);
                    }
                    const WeightVector weights = normalize_weights(miner.weights(inputs, *state.phi));
                    state.weight_fallbacks += weights.fell_back ? 1 : 0;
                    acc.ratio += metrics::positive_weight_ratio(probe.labels, weights.normalized);
                    StepResult step =
                        actual_step(probe, state.theta, weights.normalized, normalizer, lr, state.theta_optimizer);
                    if (hooks.on_iteration) {
                        hooks.on_iteration(IterationTrace{state.iteration, &batch, &state.theta, &theta_hat,
                                                          &step.params, probe.predictions, weights.normalized});
                    }
                    state.theta = std::move(step.params);
                    state.theta_optimizer = std::move(step.state);
                } else {
                    const auto weights = baseline_weights(batch, strategy);
                    acc.ratio += metrics::positive_weight_ratio(probe.labels, weights);
                    StepResult step = actual_step(probe, state.theta, weights, normalizer, lr, state.theta_optimizer);
                    state.theta = std::move(step.params);
                    state.theta_optimizer = std::move(step.state);
                }
            } catch (const NumericError& e) {
                throw NumericError("iteration " + std::to_string(state.iteration) + " (epoch " + std::to_string(epoch) +
                                   "): " + e.what());
            }
        }
        const double n = static_cast<double>(acc.count);
        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = acc.train_loss / n;
        record.meta_loss = strategy == Strategy::dsmm ? acc.meta_loss / n : std::numeric_limits<double>::quiet_NaN();
        record.pos_weight_ratio = acc.ratio / n;
        record.lr = lr;
        record.train_accuracy = acc.accuracy / n;
        state.history.push_back(record);
        state.epoch = epoch + 1;
    }
    return state;
}

}  // namespace dsmm::engine
