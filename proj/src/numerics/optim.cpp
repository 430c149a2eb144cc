#include "dsmm/numerics/optim.hpp"

#include <cmath>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::num {

ParamSet sgd_step(const ParamSet& params, const GradSet& grads, double lr) {
    require(lr >= 0.0, "learning rate must be nonnegative");
    check_congruent(params, grads);
    ParamSet out = params;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto dst = out[i].data();
        auto g = grads[i].data();
        for (std::size_t k = 0; k < dst.size(); ++k) {
            dst[k] -= lr * g[k];
        }
    }
    return out;
}

AdamState AdamState::zeros_like(const ParamSet& params) {
    return AdamState{GradSet::zeros_like(params), GradSet::zeros_like(params)};
}

std::pair<ParamSet, AdamState> adam_step(const ParamSet& params, const GradSet& grads, const AdamState& state,
                                         double lr, std::uint64_t step, const AdamHyper& hyper) {
    require(step >= 1, "adam step index starts at 1");
    require(lr >= 0.0, "learning rate must be nonnegative");
    check_congruent(params, grads);
    check_congruent(params, state.first);
    check_congruent(params, state.second);

    const double t = static_cast<double>(step);
    const double correction1 = 1.0 - std::pow(hyper.beta1, t);
    const double correction2 = 1.0 - std::pow(hyper.beta2, t);

    ParamSet out = params;
    AdamState next = state;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto p = out[i].data();
        auto m = next.first[i].data();
        auto v = next.second[i].data();
        auto g = grads[i].data();
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g[k];
            v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g[k] * g[k];
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            p[k] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
        }
    }
    return {std::move(out), std::move(next)};
}

}  // namespace dsmm::num
