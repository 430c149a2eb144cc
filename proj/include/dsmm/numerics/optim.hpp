#pragma once

#include <cstdint>
#include <utility>

#include "dsmm/numerics/params.hpp"

namespace dsmm::num {

// p - lr * g for every scalar. Inputs are left untouched.
ParamSet sgd_step(const ParamSet& params, const GradSet& grads, double lr);

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First and second moment accumulators, congruent with the parameters.
struct AdamState {
    GradSet first;
    GradSet second;

    static AdamState zeros_like(const ParamSet& params);
};

/// Bias-corrected Adam. `step` is the 1-based update index.
///
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
std::pair<ParamSet, AdamState> adam_step(const ParamSet& params, const GradSet& grads, const AdamState& state,
                                         double lr, std::uint64_t step, const AdamHyper& hyper = {});

}  // namespace dsmm::num
