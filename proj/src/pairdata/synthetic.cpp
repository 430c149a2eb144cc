#include "dsmm/pairdata/synthetic.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "dsmm/numerics/errors.hpp"
#include "dsmm/numerics/rng.hpp"

namespace dsmm::pairs {

PairDataset generate_synthetic(const GeneratorConfig& config, std::uint64_t seed) {
    validate(config);
    const std::size_t n = config.families;
    const std::size_t d = config.dim;
    const num::Rng root(seed, "synthetic");

    num::Tensor mixing;
    if (config.mode == GeneratorMode::nonlinear) {
        num::Rng rng = root.split("mixing");
        mixing = num::Tensor::matrix(d, d);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (double& a : mixing.data()) {
            a = rng.normal() * scale;
        }
    }

    const double innovation = std::sqrt(1.0 - config.rho * config.rho);
    num::Tensor parents = num::Tensor::matrix(n, d);
    num::Tensor children = num::Tensor::matrix(n, d);
    std::vector<std::int64_t> ids(n);
    std::vector<double> u(d), v(d);

    auto observe = [&](const std::vector<double>& latent, std::span<double> out, num::Rng& rng) {
        for (std::size_t i = 0; i < d; ++i) {
            double clean = latent[i];
            if (config.mode == GeneratorMode::nonlinear) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    acc += mixing.at(i, j) * latent[j];
                }
                clean = std::tanh(acc);
            }
            out[i] = clean + config.sigma * rng.normal();
        }
    };

    for (std::size_t f = 0; f < n; ++f) {
        num::Rng rng = root.split("family/" + std::to_string(f));
        ids[f] = static_cast<std::int64_t>(f);
        for (std::size_t i = 0; i < d; ++i) {
            u[i] = rng.normal();
        }
        for (std::size_t i = 0; i < d; ++i) {
            v[i] = config.rho * u[i] + innovation * rng.normal();
        }
        observe(u, parents.data().subspan(f * d, d), rng);
        observe(v, children.data().subspan(f * d, d), rng);
    }
    return PairDataset(std::move(ids), std::move(parents), std::move(children), GeneratorMeta{config, seed});
}

double bayes_llr(std::span<const double> parent, std::span<const double> child, const GeneratorMeta& meta) {
    require(meta.config.mode == GeneratorMode::linear, "bayes_llr is only defined for linear-mode data");
    require(parent.size() == child.size() && parent.size() == meta.config.dim,
            "bayes_llr: feature length does not match generator dimension");
    const double s = 1.0 + meta.config.sigma * meta.config.sigma;
    const double rho = meta.config.rho;
    const double det_kin = s * s - rho * rho;
    // -1/2 log(det_kin / s^2), identical for every coordinate.
    const double log_det_term = -0.5 * std::log1p(-(rho * rho) / (s * s));
    double llr = 0.0;
    for (std::size_t i = 0; i < parent.size(); ++i) {
        const double x = parent[i];
        const double y = child[i];
        const double quad_kin = (s * x * x - 2.0 * rho * x * y + s * y * y) / det_kin;
        const double quad_unrelated = (x * x + y * y) / s;
        llr += log_det_term - 0.5 * (quad_kin - quad_unrelated);
    }
    return llr;
}

}  // namespace dsmm::pairs
