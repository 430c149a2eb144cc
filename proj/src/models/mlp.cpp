#include "dsmm/models/mlp.hpp"

#include <cmath>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::models {

std::string to_string(Activation act) {
    switch (act) {
        case Activation::linear:
            return "linear";
        case Activation::relu:
            return "relu";
        case Activation::tanh:
            return "tanh";
        case Activation::sigmoid:
            return "sigmoid";
    }
    return "linear";
}

Activation parse_activation(std::string_view name) {
    if (name == "linear") return Activation::linear;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw ContractError("unknown activation '" + std::string(name) + "'");
}

num::Var activate(num::Graph& graph, num::Var x, Activation act) {
    switch (act) {
        case Activation::linear:
            return x;
        case Activation::relu:
            return graph.relu(x);
        case Activation::tanh:
            return graph.tanh(x);
        case Activation::sigmoid:
            return graph.sigmoid(x);
    }
    return x;
}

Mlp::Mlp(std::string prefix, std::vector<std::size_t> widths, Activation hidden, Activation output,
         std::size_t first_index)
    : prefix_(std::move(prefix)), widths_(std::move(widths)), hidden_(hidden), output_(output), first_(first_index) {
    require(widths_.size() >= 2, prefix_ + ": an MLP needs at least an input and an output width");
    for (std::size_t w : widths_) {
        require(w >= 1, prefix_ + ": layer widths must be positive");
    }
}

void Mlp::append_init(num::ParamSet& params, num::Rng& rng) const {
    require(params.size() == first_, prefix_ + ": parameters appended out of order");
    for (std::size_t l = 0; l < layer_count(); ++l) {
        const std::size_t fan_in = widths_[l];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        num::Tensor w = num::Tensor::matrix(fan_in, widths_[l + 1]);
        for (double& v : w.data()) {
            v = (2.0 * rng.uniform() - 1.0) * bound;
        }
        params.add(prefix_ + ".w" + std::to_string(l), std::move(w));
        params.add(prefix_ + ".b" + std::to_string(l), num::Tensor::matrix(1, widths_[l + 1]));
    }
}

void Mlp::append_zeros(num::ParamSet& params) const {
    require(params.size() == first_, prefix_ + ": parameters appended out of order");
    for (std::size_t l = 0; l < layer_count(); ++l) {
        params.add(prefix_ + ".w" + std::to_string(l), num::Tensor::matrix(widths_[l], widths_[l + 1]));
        params.add(prefix_ + ".b" + std::to_string(l), num::Tensor::matrix(1, widths_[l + 1]));
    }
}

num::Var Mlp::forward(num::Graph& graph, const num::ParamVars& params, num::Var x) const {
    num::Var h = x;
    for (std::size_t l = 0; l < layer_count(); ++l) {
        h = graph.add(graph.matmul(h, params[weight_index(l)]), params[bias_index(l)]);
        h = activate(graph, h, l + 1 == layer_count() ? output_ : hidden_);
    }
    return h;
}

}  // namespace dsmm::models
