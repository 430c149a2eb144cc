#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dsmm/models/mlp.hpp"
#include "dsmm/numerics/autodiff.hpp"
#include "dsmm/numerics/params.hpp"
#include "dsmm/numerics/rng.hpp"

namespace dsmm::models {

struct KinshipConfig {
    std::size_t input_dim = 16;
    std::vector<std::size_t> encoder_hidden = {32};
    std::size_t embed_dim = 16;  // D
    Activation encoder_hidden_act = Activation::relu;
    Activation encoder_output_act = Activation::linear;
    std::vector<std::size_t> relation_hidden = {8};
    std::size_t relation_out = 4;  // k, per-dimension relation width
    std::vector<std::size_t> aggregator_hidden = {32};

    friend bool operator==(const KinshipConfig&, const KinshipConfig&) = default;
};

/// Relation-network kinship verifier.
///
/// Both faces pass through the same encoder. For every embedding coordinate i
/// the shared relation unit h maps (e_x[i], e_y[i]) to k features; the D
/// outputs are concatenated in coordinate order and the aggregator r maps the
/// D*k vector to a logit, squashed to a kin probability.
///
/// Parameter order: encoder ("enc.*"), relation unit ("rel.*"), aggregator ("agg.*").
class KinshipModel {
public:
    explicit KinshipModel(KinshipConfig config);

    const KinshipConfig& config() const { return config_; }

    num::ParamSet init(num::Rng& rng) const;
    num::ParamSet zeros() const;
    // Throws ContractError when names or shapes do not fit this architecture.
    void check_params(const num::ParamSet& theta) const;

    // x: B x input_dim  ->  B x D
    num::Var encode(num::Graph& graph, const num::ParamVars& theta, num::Var x) const;
    // x, y: B x input_dim  ->  B x 1 probabilities
    num::Var forward(num::Graph& graph, const num::ParamVars& theta, num::Var x, num::Var y) const;

    std::vector<double> encode(std::span<const double> x, const num::ParamSet& theta) const;
    double predict(std::span<const double> parent, std::span<const double> child, const num::ParamSet& theta) const;
    // Rows of `parents` pair with rows of `children`.
    std::vector<double> predict(const num::Tensor& parents, const num::Tensor& children,
                                const num::ParamSet& theta) const;

    const Mlp& encoder() const { return encoder_; }
    const Mlp& relation() const { return relation_; }
    const Mlp& aggregator() const { return aggregator_; }

private:
    KinshipConfig config_;
    Mlp encoder_;
    Mlp relation_;
    Mlp aggregator_;
};

// -log(p) for label 1, -log(1 - p) for label 0, with the log clamped at kLogFloor.
double bce_per_sample(double p, int label);

// Focal variant: -(1 - p_t)^focal_gamma * log(p_t), p_t = p for label 1 else 1 - p.
double focal_per_sample(double p, int label, double focal_gamma);

// Per-row losses (B x 1) for probabilities `p` (B x 1).
num::Var bce_per_sample(num::Graph& graph, num::Var p, std::span<const int> labels);
num::Var focal_per_sample(num::Graph& graph, num::Var p, std::span<const int> labels, double focal_gamma);

}  // namespace dsmm::models
