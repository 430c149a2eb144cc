#include "dsmm/engine/steps.hpp"

#include <algorithm>
#include <string>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::engine {

namespace {

num::Tensor column(std::span<const double> values) {
    return num::Tensor::matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

num::ParamVars bind_parameters(num::Graph& graph, const num::ParamSet& params) {
    std::vector<num::Var> vars;
    vars.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        vars.push_back(graph.parameter(params[i]));
    }
    return num::ParamVars(params, std::move(vars));
}

}  // namespace

SampleProbe probe_samples(const pairs::PairDataset& data, const models::KinshipModel& model,
                          const num::ParamSet& theta, std::span<const pairs::PairSample> samples, SampleLoss loss,
                          double focal_gamma) {
    SampleProbe probe;
    probe.labels.reserve(samples.size());
    probe.predictions.reserve(samples.size());
    probe.losses.reserve(samples.size());
    probe.grads.reserve(samples.size());
    for (const auto& sample : samples) {
        const std::span<const pairs::PairSample> one(&sample, 1);
        const int labels[] = {sample.label};
        num::Graph graph;
        const num::ParamVars bound = bind_parameters(graph, theta);
        const num::Var p = model.forward(graph, bound, graph.constant(pairs::parent_features(data, one)),
                                         graph.constant(pairs::child_features(data, one)));
        const num::Var l = loss == SampleLoss::bce ? models::bce_per_sample(graph, p, labels)
                                                   : models::focal_per_sample(graph, p, labels, focal_gamma);
        const num::Var root = graph.sum(l);
        graph.backward(root);
        std::vector<num::Tensor> grads;
        grads.reserve(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) {
            grads.push_back(graph.grad(bound[i]));
        }
        num::GradSet g(std::move(grads));
        if (!g.all_finite()) {
            throw NumericError("numeric overflow: non-finite per-sample gradient");
        }
        probe.labels.push_back(sample.label);
        probe.predictions.push_back(graph.value(p).item());
        probe.losses.push_back(graph.value(root).item());
        probe.grads.push_back(std::move(g));
    }
    return probe;
}

num::GradSet combine_gradients(const SampleProbe& probe, std::span<const double> coefficients) {
    require(coefficients.size() == probe.size(), "combine_gradients: one coefficient per sample");
    require(probe.size() > 0, "combine_gradients: empty probe");
    num::GradSet out = num::GradSet::zeros_like(probe.grads.front());
    for (std::size_t s = 0; s < probe.size(); ++s) {
        out.axpy(coefficients[s], probe.grads[s]);
    }
    return out;
}

std::size_t batch_normalizer(const pairs::Batch& batch) {
    const std::size_t expected = batch.positives * (1 + batch.ratio);
    require(batch.positives >= 1 && batch.ratio >= 1, "batch must declare m >= 1 and C >= 1");
    require(batch.size() == expected, "batch holds " + std::to_string(batch.size()) + " samples, expected m(1+C) = " +
                                          std::to_string(expected));
    const auto labels = batch.labels();
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    require(positives == batch.positives, "batch declares " + std::to_string(batch.positives) + " positives but holds " +
                                              std::to_string(positives));
    return expected;
}

double weighted_bce(std::span<const double> predictions, std::span<const int> labels, std::span<const double> weights,
                    std::size_t positives, std::size_t ratio) {
    require(predictions.size() == labels.size() && labels.size() == weights.size(),
            "weighted_bce: predictions, labels and weights must align");
    const double normalizer = static_cast<double>(positives * (1 + ratio));
    double total = 0.0;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        total += weights[s] * models::bce_per_sample(predictions[s], labels[s]);
    }
    return total / normalizer;
}

num::LossFn weighted_train_loss_fn(const pairs::PairDataset& data, const models::KinshipModel& model,
                                   const pairs::Batch& batch, std::vector<double> weights) {
    const std::size_t normalizer = batch_normalizer(batch);
    require(weights.size() == batch.size(), "weights are not aligned with the batch (" +
                                                std::to_string(weights.size()) + " vs " +
                                                std::to_string(batch.size()) + ")");
    return [&data, &model, parents = pairs::parent_features(data, batch.samples),
            children = pairs::child_features(data, batch.samples), labels = batch.labels(),
            w = column(weights), normalizer](num::Graph& graph, const num::ParamVars& theta) {
        const num::Var p = model.forward(graph, theta, graph.constant(parents), graph.constant(children));
        const num::Var losses = models::bce_per_sample(graph, p, labels);
        const num::Var weighted = graph.sum(graph.mul(graph.constant(w), losses));
        return graph.scale(weighted, 1.0 / static_cast<double>(normalizer));
    };
}

double weighted_train_loss(const pairs::PairDataset& data, const models::KinshipModel& model,
                           const pairs::Batch& batch, const num::ParamSet& theta, std::span<const double> weights) {
    return num::evaluate(weighted_train_loss_fn(data, model, batch, {weights.begin(), weights.end()}), theta);
}

num::Tensor miner_inputs(const models::MetaMiner& miner, const SampleProbe& probe) {
    return miner.inputs(probe.labels, probe.predictions, probe.losses);
}

num::ParamSet virtual_step(const SampleProbe& probe, const num::ParamSet& theta, std::span<const double> raw_weights,
                           double alpha, std::size_t normalizer) {
    require(raw_weights.size() == probe.size(), "virtual_step: one weight per sample");
    std::vector<double> coefficients(probe.size());
    for (std::size_t s = 0; s < probe.size(); ++s) {
        coefficients[s] = raw_weights[s] / static_cast<double>(normalizer);
    }
    return num::sgd_step(theta, combine_gradients(probe, coefficients), alpha);
}

num::ParamSet virtual_step(const pairs::PairDataset& data, const models::KinshipModel& model,
                           const models::MetaMiner& miner, const pairs::Batch& train_batch,
                           const num::ParamSet& theta, const num::ParamSet& phi, double alpha) {
    const std::size_t normalizer = batch_normalizer(train_batch);
    const SampleProbe probe = probe_samples(data, model, theta, train_batch.samples);
    const auto raw = miner.weights(miner_inputs(miner, probe), phi);
    return virtual_step(probe, theta, raw, alpha, normalizer);
}

void check_balanced(const pairs::Batch& batch) {
    require(batch.ratio == 1, "meta batch must be balanced (C = 1), got C = " + std::to_string(batch.ratio));
    batch_normalizer(batch);
}

std::pair<double, num::GradSet> meta_loss_and_grad(const pairs::PairDataset& data, const models::KinshipModel& model,
                                                   const pairs::Batch& meta_batch, const num::ParamSet& theta_hat) {
    check_balanced(meta_batch);
    return num::value_and_grad(
        weighted_train_loss_fn(data, model, meta_batch, std::vector<double>(meta_batch.size(), 1.0)), theta_hat);
}

double meta_loss(const pairs::PairDataset& data, const models::KinshipModel& model, const pairs::Batch& meta_batch,
                 const num::ParamSet& theta_hat) {
    check_balanced(meta_batch);
    return weighted_train_loss(data, model, meta_batch, theta_hat, std::vector<double>(meta_batch.size(), 1.0));
}

num::GradSet meta_gradient(const SampleProbe& probe, const models::MetaMiner& miner, const num::Tensor& inputs,
                           const num::ParamSet& phi, const num::GradSet& meta_grad_at_theta_hat, double alpha,
                           std::size_t normalizer) {
    require(inputs.rows() == probe.size(), "meta_gradient: miner inputs not aligned with the probe");
    std::vector<double> coefficients(probe.size());
    for (std::size_t s = 0; s < probe.size(); ++s) {
        const double alignment = probe.grads[s].dot(meta_grad_at_theta_hat);
        coefficients[s] = -alpha * alignment / static_cast<double>(normalizer);
    }
    const num::Tensor c = column(coefficients);
    auto [value, grad] = num::value_and_grad(
        [&](num::Graph& graph, const num::ParamVars& bound) {
            const num::Var g = miner.forward(graph, bound, graph.constant(inputs));
            return graph.sum(graph.mul(graph.constant(c), g));
        },
        phi);
    return std::move(grad);
}

num::GradSet meta_gradient(const pairs::PairDataset& data, const models::KinshipModel& model,
                           const models::MetaMiner& miner, const pairs::Batch& train_batch,
                           const pairs::Batch& meta_batch, const num::ParamSet& theta, const num::ParamSet& phi,
                           double alpha) {
    const std::size_t normalizer = batch_normalizer(train_batch);
    const SampleProbe probe = probe_samples(data, model, theta, train_batch.samples);
    const num::Tensor inputs = miner_inputs(miner, probe);
    const auto raw = miner.weights(inputs, phi);
    const num::ParamSet theta_hat = virtual_step(probe, theta, raw, alpha, normalizer);
    const auto [loss, grad_meta] = meta_loss_and_grad(data, model, meta_batch, theta_hat);
    return meta_gradient(probe, miner, inputs, phi, grad_meta, alpha, normalizer);
}

num::ParamSet meta_step(const num::ParamSet& phi, const num::GradSet& meta_grad, double beta) {
    return num::sgd_step(phi, meta_grad, beta);
}

WeightVector normalize_weights(std::span<const double> raw) {
    require(!raw.empty(), "normalize_weights: empty batch");
    WeightVector out;
    out.raw.assign(raw.begin(), raw.end());
    double total = 0.0;
    for (double w : raw) {
        require(w >= 0.0, "normalize_weights: raw weights must be nonnegative");
        total += w;
    }
    out.normalized.resize(raw.size());
    if (total < kMinWeightSum) {
        out.fell_back = true;
        std::fill(out.normalized.begin(), out.normalized.end(), 1.0 / static_cast<double>(raw.size()));
        return out;
    }
    for (std::size_t s = 0; s < raw.size(); ++s) {
        out.normalized[s] = raw[s] / total;
    }
    return out;
}

std::string_view to_string(Optimizer optimizer) { return optimizer == Optimizer::sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(std::string_view text) {
    if (text == "sgd") return Optimizer::sgd;
    if (text == "adam") return Optimizer::adam;
    throw ContractError("unknown optimizer '" + std::string(text) + "'");
}

OptimizerState OptimizerState::fresh(Optimizer kind, const num::ParamSet& params, num::AdamHyper hyper) {
    OptimizerState state;
    state.kind = kind;
    state.hyper = hyper;
    if (kind == Optimizer::adam) {
        state.adam = num::AdamState::zeros_like(params);
    }
    return state;
}

StepResult optimizer_step(const num::ParamSet& params, const num::GradSet& grads, double lr,
                          const OptimizerState& state) {
    StepResult result{num::ParamSet(), state};
    result.state.steps += 1;
    if (state.kind == Optimizer::sgd) {
        result.params = num::sgd_step(params, grads, lr);
    } else {
        auto [next, adam] = num::adam_step(params, grads, state.adam, lr, result.state.steps, state.hyper);
        result.params = std::move(next);
        result.state.adam = std::move(adam);
    }
    if (!result.params.all_finite()) {
        throw NumericError("numeric overflow: non-finite parameters after optimizer step");
    }
    return result;
}

StepResult actual_step(const SampleProbe& probe, const num::ParamSet& theta, std::span<const double> normalized_weights,
                       std::size_t normalizer, double gamma, const OptimizerState& state) {
    require(normalized_weights.size() == probe.size(), "actual_step: one weight per sample");
    std::vector<double> coefficients(probe.size());
    for (std::size_t s = 0; s < probe.size(); ++s) {
        coefficients[s] = normalized_weights[s] / static_cast<double>(normalizer);
    }
    return optimizer_step(theta, combine_gradients(probe, coefficients), gamma, state);
}

StepResult actual_step(const pairs::PairDataset& data, const models::KinshipModel& model, const pairs::Batch& batch,
                       const num::ParamSet& theta, std::span<const double> normalized_weights, double gamma,
                       const OptimizerState& state) {
    const std::size_t normalizer = batch_normalizer(batch);
    const SampleProbe probe = probe_samples(data, model, theta, batch.samples);
    return actual_step(probe, theta, normalized_weights, normalizer, gamma, state);
}

}  // namespace dsmm::engine
