#include "dsmm/models/miner.hpp"

#include <algorithm>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::models {

namespace {

const MinerConfig& validated(const MinerConfig& c) {
    require(c.hidden >= 1, "meta-miner: hidden width must be >= 1");
    require(c.loss_cap > 0.0, "meta-miner: loss_cap must be positive");
    return c;
}

}  // namespace

MetaMiner::MetaMiner(MinerConfig config)
    : config_(validated(config)),
      network_("miner", {kInputWidth, config_.hidden, 1}, config_.hidden_act, Activation::sigmoid, 0) {}

num::ParamSet MetaMiner::init(num::Rng& rng) const {
    num::ParamSet phi;
    network_.append_init(phi, rng);
    auto& out_w = phi[network_.weight_index(1)];
    std::fill(out_w.data().begin(), out_w.data().end(), 0.0);
    return phi;
}

num::ParamSet MetaMiner::zeros() const {
    num::ParamSet phi;
    network_.append_zeros(phi);
    return phi;
}

void MetaMiner::check_params(const num::ParamSet& phi) const {
    const num::ParamSet expected = zeros();
    require(phi.size() == expected.size(), "miner parameters: expected " + std::to_string(expected.size()) +
                                               " tensors, got " + std::to_string(phi.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
        require(phi.name(i) == expected.name(i) && phi[i].same_shape(expected[i]),
                "miner parameter " + std::to_string(i) + ": expected " + expected.name(i) + " " +
                    num::shape_string(expected[i].shape()) + ", got " + phi.name(i) + " " +
                    num::shape_string(phi[i].shape()));
    }
}

num::Tensor MetaMiner::inputs(std::span<const int> labels, std::span<const double> predictions,
                              std::span<const double> losses) const {
    require(labels.size() == predictions.size() && labels.size() == losses.size(),
            "miner inputs: labels, predictions and losses must align");
    num::Tensor out = num::Tensor::matrix(labels.size(), kInputWidth);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
        require(losses[i] >= 0.0, "miner inputs: loss must be nonnegative");
        out.at(i, 0) = static_cast<double>(labels[i]);
        out.at(i, 1) = predictions[i];
        out.at(i, 2) = std::min(losses[i], config_.loss_cap);
    }
    return out;
}

num::Var MetaMiner::forward(num::Graph& graph, const num::ParamVars& phi, num::Var in) const {
    require(graph.value(in).cols() == kInputWidth, "meta-miner takes exactly 3 inputs per sample");
    return network_.forward(graph, phi, in);
}

double MetaMiner::weight(int label, double prediction, double loss, const num::ParamSet& phi) const {
    const int labels[] = {label};
    const double predictions[] = {prediction};
    const double losses[] = {loss};
    return weights(inputs(labels, predictions, losses), phi).front();
}

std::vector<double> MetaMiner::weights(const num::Tensor& in, const num::ParamSet& phi) const {
    num::Graph graph;
    std::vector<num::Var> vars;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        vars.push_back(graph.constant(phi[i]));
    }
    const num::ParamVars bound(phi, std::move(vars));
    const auto out = graph.value(forward(graph, bound, graph.constant(in))).data();
    return {out.begin(), out.end()};
}

}  // namespace dsmm::models
