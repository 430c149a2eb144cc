#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dsmm/models/kinship.hpp"
#include "dsmm/models/miner.hpp"
#include "dsmm/numerics/autodiff.hpp"
#include "dsmm/numerics/optim.hpp"
#include "dsmm/numerics/params.hpp"
#include "dsmm/pairdata/dataset.hpp"
#include "dsmm/pairdata/sampler.hpp"

namespace dsmm::engine {

enum class SampleLoss { bce, focal };

/// Forward values and per-sample loss gradients of a batch at fixed theta.
///
/// Every weighted objective over the batch is a linear combination of these
/// per-sample gradients, so one probe serves the virtual step, the
/// meta-gradient inner products and the actual step.
struct SampleProbe {
    std::vector<int> labels;
    std::vector<double> predictions;
    std::vector<double> losses;
    std::vector<num::GradSet> grads;

    std::size_t size() const { return labels.size(); }
};

SampleProbe probe_samples(const pairs::PairDataset& data, const models::KinshipModel& model,
                          const num::ParamSet& theta, std::span<const pairs::PairSample> samples,
                          SampleLoss loss = SampleLoss::bce, double focal_gamma = 2.0);

// sum_s coefficients[s] * grads[s]
num::GradSet combine_gradients(const SampleProbe& probe, std::span<const double> coefficients);

// m (1 + C); throws unless the batch holds exactly that many samples with m positives.
std::size_t batch_normalizer(const pairs::Batch& batch);

/// (1 / (m (1 + C))) * sum_s w_s * bce(f(s), label_s)
double weighted_train_loss(const pairs::PairDataset& data, const models::KinshipModel& model,
                           const pairs::Batch& batch, const num::ParamSet& theta, std::span<const double> weights);

// Same objective as a LossFn over theta, for value_and_grad.
num::LossFn weighted_train_loss_fn(const pairs::PairDataset& data, const models::KinshipModel& model,
                                   const pairs::Batch& batch, std::vector<double> weights);

// Scalar form on given predictions.
double weighted_bce(std::span<const double> predictions, std::span<const int> labels, std::span<const double> weights,
                    std::size_t positives, std::size_t ratio);

// Miner inputs (label, prediction, loss) taken from a probe; constants w.r.t. theta.
num::Tensor miner_inputs(const models::MetaMiner& miner, const SampleProbe& probe);

/// theta_hat = theta - alpha * grad_theta L_vtrn, with raw miner weights
/// g(s; phi) and miner inputs evaluated at theta. Returns a new ParamSet.
num::ParamSet virtual_step(const pairs::PairDataset& data, const models::KinshipModel& model,
                           const models::MetaMiner& miner, const pairs::Batch& train_batch,
                           const num::ParamSet& theta, const num::ParamSet& phi, double alpha);

num::ParamSet virtual_step(const SampleProbe& probe, const num::ParamSet& theta, std::span<const double> raw_weights,
                           double alpha, std::size_t normalizer);

// Throws unless the batch has m positives and m negatives.
void check_balanced(const pairs::Batch& batch);

// Unweighted balanced BCE, 1/(2m) per sample.
double meta_loss(const pairs::PairDataset& data, const models::KinshipModel& model, const pairs::Batch& meta_batch,
                 const num::ParamSet& theta_hat);

std::pair<double, num::GradSet> meta_loss_and_grad(const pairs::PairDataset& data, const models::KinshipModel& model,
                                                   const pairs::Batch& meta_batch, const num::ParamSet& theta_hat);

/// Exact gradient of phi -> meta_loss(virtual_step(theta, phi)).
///
/// The virtual step is plain SGD and the miner inputs do not depend on phi, so
///   d theta_hat / d phi = -(alpha / M) sum_s grad_theta l_s(theta) (x) grad_phi g_s
/// and the chain rule collapses to
///   -(alpha / M) sum_s <grad_theta l_s(theta), grad_theta L_meta(theta_hat)> grad_phi g_s.
num::GradSet meta_gradient(const pairs::PairDataset& data, const models::KinshipModel& model,
                           const models::MetaMiner& miner, const pairs::Batch& train_batch,
                           const pairs::Batch& meta_batch, const num::ParamSet& theta, const num::ParamSet& phi,
                           double alpha);

num::GradSet meta_gradient(const SampleProbe& probe, const models::MetaMiner& miner, const num::Tensor& inputs,
                           const num::ParamSet& phi, const num::GradSet& meta_grad_at_theta_hat, double alpha,
                           std::size_t normalizer);

// phi - beta * grad
num::ParamSet meta_step(const num::ParamSet& phi, const num::GradSet& meta_grad, double beta);

struct WeightVector {
    std::vector<double> raw;
    std::vector<double> normalized;
    bool fell_back = false;  // raw sum under kMinWeightSum, uniform weights used instead
};

inline constexpr double kMinWeightSum = 1e-12;

// normalized_s = raw_s / sum_q raw_q over the whole batch.
WeightVector normalize_weights(std::span<const double> raw);

enum class Optimizer { sgd, adam };

std::string_view to_string(Optimizer optimizer);
Optimizer parse_optimizer(std::string_view text);

struct OptimizerState {
    Optimizer kind = Optimizer::adam;
    num::AdamHyper hyper;
    num::AdamState adam;
    std::uint64_t steps = 0;

    static OptimizerState fresh(Optimizer kind, const num::ParamSet& params, num::AdamHyper hyper = {});
};

struct StepResult {
    num::ParamSet params;
    OptimizerState state;
};

// One SGD or Adam update with the given gradient.
StepResult optimizer_step(const num::ParamSet& params, const num::GradSet& grads, double lr,
                          const OptimizerState& state);

/// One update of theta on (1/M) sum_s w_s l_s with normalized weights w.
StepResult actual_step(const pairs::PairDataset& data, const models::KinshipModel& model, const pairs::Batch& batch,
                       const num::ParamSet& theta, std::span<const double> normalized_weights, double gamma,
                       const OptimizerState& state);

StepResult actual_step(const SampleProbe& probe, const num::ParamSet& theta, std::span<const double> normalized_weights,
                       std::size_t normalizer, double gamma, const OptimizerState& state);

}  // namespace dsmm::engine
