#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dsmm/models/mlp.hpp"
#include "dsmm/numerics/autodiff.hpp"
#include "dsmm/numerics/params.hpp"
#include "dsmm/numerics/rng.hpp"

namespace dsmm::models {

struct MinerConfig {
    std::size_t hidden = 64;
    Activation hidden_act = Activation::relu;
    // Loss inputs are clipped to this before entering the network.
    double loss_cap = 10.0;

    friend bool operator==(const MinerConfig&, const MinerConfig&) = default;
};

/// Sample-weighting network: (label, prediction, loss) -> weight in (0, 1).
///
/// One hidden layer, sigmoid head. Parameters "miner.w0", "miner.b0",
/// "miner.w1", "miner.b1".
class MetaMiner {
public:
    static constexpr std::size_t kInputWidth = 3;

    explicit MetaMiner(MinerConfig config);

    const MinerConfig& config() const { return config_; }

    // Fan-in uniform hidden layer; the output layer starts at zero so every
    // sample initially gets weight sigmoid(0) = 0.5.
    num::ParamSet init(num::Rng& rng) const;
    num::ParamSet zeros() const;
    void check_params(const num::ParamSet& phi) const;

    // B x 3 rows of (label, prediction, capped loss).
    num::Tensor inputs(std::span<const int> labels, std::span<const double> predictions,
                       std::span<const double> losses) const;

    // B x 3 -> B x 1
    num::Var forward(num::Graph& graph, const num::ParamVars& phi, num::Var inputs) const;

    double weight(int label, double prediction, double loss, const num::ParamSet& phi) const;
    std::vector<double> weights(const num::Tensor& inputs, const num::ParamSet& phi) const;

    const Mlp& network() const { return network_; }

private:
    MinerConfig config_;
    Mlp network_;
};

}  // namespace dsmm::models
