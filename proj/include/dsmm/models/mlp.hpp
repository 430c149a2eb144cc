#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dsmm/numerics/autodiff.hpp"
#include "dsmm/numerics/params.hpp"
#include "dsmm/numerics/rng.hpp"

namespace dsmm::models {

enum class Activation { linear, relu, tanh, sigmoid };

std::string to_string(Activation act);
// Throws ContractError for unknown names.
Activation parse_activation(std::string_view name);

num::Var activate(num::Graph& graph, num::Var x, Activation act);

/// Stack of dense layers y = act(x W + b), W stored in x out.
///
/// Parameters live in a caller-owned ParamSet starting at `first_index`,
/// as "<prefix>.w<l>", "<prefix>.b<l>" pairs in layer order.
class Mlp {
public:
    Mlp(std::string prefix, std::vector<std::size_t> widths, Activation hidden, Activation output,
        std::size_t first_index);

    // Fan-in uniform weights (bound sqrt(6 / fan_in)), zero biases.
    void append_init(num::ParamSet& params, num::Rng& rng) const;
    void append_zeros(num::ParamSet& params) const;

    num::Var forward(num::Graph& graph, const num::ParamVars& params, num::Var x) const;

    std::size_t layer_count() const { return widths_.size() - 1; }
    std::size_t param_count() const { return 2 * layer_count(); }
    std::size_t in_width() const { return widths_.front(); }
    std::size_t out_width() const { return widths_.back(); }
    std::size_t weight_index(std::size_t layer) const { return first_ + 2 * layer; }
    std::size_t bias_index(std::size_t layer) const { return first_ + 2 * layer + 1; }
    const std::vector<std::size_t>& widths() const { return widths_; }

private:
    std::string prefix_;
    std::vector<std::size_t> widths_;
    Activation hidden_;
    Activation output_;
    std::size_t first_;
};

}  // namespace dsmm::models
