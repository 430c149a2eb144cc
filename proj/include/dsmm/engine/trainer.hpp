#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsmm/engine/steps.hpp"
#include "dsmm/models/kinship.hpp"
#include "dsmm/models/miner.hpp"
#include "dsmm/pairdata/dataset.hpp"
#include "dsmm/pairdata/sampler.hpp"

namespace dsmm::engine {

enum class Strategy { dsmm, balance_batch, unbalance_const, focal_balance, focal_unbalance, fixed_dataset };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);

struct TrainConfig {
    double alpha = 0.001;   // virtual step size
    double beta = 0.0001;   // miner step size
    double gamma = 0.001;   // actual step size
    std::size_t ratio = 4;  // C
    std::size_t positives = 8;  // m
    std::size_t epochs = 200;
    Optimizer actual_optimizer = Optimizer::adam;
    Optimizer meta_optimizer = Optimizer::adam;
    double lr_decay = 0.1;
    // Epochs at which gamma is multiplied by lr_decay. Empty: 50% and 75% of `epochs`.
    std::vector<std::size_t> milestones;
    Strategy strategy = Strategy::dsmm;
    double focal_gamma = 2.0;
    // Skip the miner update; the miner keeps its initial output.
    bool freeze_miner = false;
    std::uint64_t seed = 0;
    models::KinshipConfig kinship;
    models::MinerConfig miner;
};

// One message per offending field; empty when valid.
std::vector<std::string> validate(const TrainConfig& config);

std::vector<std::size_t> effective_milestones(const TrainConfig& config);
double learning_rate_at(const TrainConfig& config, std::size_t epoch);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;        // mean unweighted BCE of train batches at theta^t
    double meta_loss = 0.0;         // mean meta loss at theta_hat; NaN for baselines
    double pos_weight_ratio = 0.0;  // mean over iterations
    double lr = 0.0;                // gamma in effect
    double train_accuracy = 0.0;    // on train batches at theta^t
};

struct TrainState {
    num::ParamSet theta;
    std::optional<num::ParamSet> phi;  // only for the dsmm strategy
    OptimizerState theta_optimizer;
    std::optional<OptimizerState> phi_optimizer;
    std::size_t epoch = 0;
    std::size_t iteration = 0;
    std::size_t weight_fallbacks = 0;
    std::vector<EpochRecord> history;
};

// Snapshot handed to TrainHooks::on_iteration after each dsmm iteration.
struct IterationTrace {
    std::size_t iteration = 0;
    const pairs::Batch* train_batch = nullptr;
    const num::ParamSet* theta_before = nullptr;
    const num::ParamSet* theta_hat = nullptr;
    const num::ParamSet* theta_after = nullptr;
    std::span<const double> predictions_before;
    std::span<const double> normalized_weights;
};

struct TrainHooks {
    std::function<void(const IterationTrace&)> on_iteration;
};

/// Runs `epochs` epochs of ceil(|split| / m) iterations on families `split`.
///
/// dsmm iteration: unbalanced train batch, balanced meta batch, virtual step,
/// meta-gradient and miner update, weights from the updated miner (inputs
/// still at theta^t), normalization, actual step. Baselines replace the middle
/// with fixed weights. Numeric failures rethrow with the iteration index.
TrainState train(const pairs::PairDataset& data, std::span<const std::size_t> split, const TrainConfig& config,
                 const TrainHooks& hooks = {});

/// Loss a baseline strategy optimizes on a batch.
///   fixed_dataset, balance_batch: balanced BCE, 1/(2m) per sample
///   unbalance_const: weight 1 on positives, 1/C on negatives, 1/(m(1+C))
///   focal_*: -(1 - p_t)^focal_gamma log p_t with the batch's own scaling
double baseline_loss(const pairs::PairDataset& data, const models::KinshipModel& model, const pairs::Batch& batch,
                     const num::ParamSet& theta, Strategy strategy, const TrainConfig& config);

// Per-sample weights a baseline strategy applies (before the 1/M factor).
std::vector<double> baseline_weights(const pairs::Batch& batch, Strategy strategy);

std::vector<double> predict_pairs(const pairs::PairDataset& data, const models::KinshipModel& model,
                                  const num::ParamSet& theta, std::span<const pairs::PairSample> pairs);

}  // namespace dsmm::engine
