#include "dsmm/harness/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "dsmm/engine/steps.hpp"
#include "dsmm/models/kinship.hpp"
#include "dsmm/models/miner.hpp"
#include "dsmm/pairdata/sampler.hpp"
#include "dsmm/pairdata/synthetic.hpp"

namespace dsmm::harness {

namespace {

constexpr std::size_t kFamilies = 12;
constexpr std::size_t kInputDim = 4;

// Entries whose magnitude is below this fraction of the largest entry are
// compared on the absolute scale of that largest entry instead.
constexpr double kRelativeFloor = 1e-6;

models::KinshipConfig tiny_kinship(std::size_t embed_dim) {
    models::KinshipConfig config;
    config.input_dim = kInputDim;
    config.encoder_hidden = {4};
    config.embed_dim = embed_dim;
    config.relation_hidden = {3};
    config.relation_out = 2;
    config.aggregator_hidden = {4};
    return config;
}

}  // namespace

std::vector<GradcheckCase> default_grid() {
    std::vector<GradcheckCase> grid;
    std::uint64_t seed = 1;
    for (std::size_t d : {2, 4, 8}) {
        for (std::size_t h : {4, 8}) {
            for (std::size_t c : {1, 3}) {
                GradcheckCase setup;
                setup.embed_dim = d;
                setup.miner_hidden = h;
                setup.ratio = c;
                setup.seed = seed++;
                grid.push_back(setup);
            }
        }
    }
    GradcheckCase still;
    still.alpha = 0.0;
    still.seed = seed;
    grid.push_back(still);
    return grid;
}

GradcheckRow run_gradcheck_case(const GradcheckCase& setup, bool corrupt_sign, double tolerance) {
    pairs::GeneratorConfig gen;
    gen.families = kFamilies;
    gen.dim = kInputDim;
    const auto data = pairs::generate_synthetic(gen, setup.seed);
    std::vector<std::size_t> split(kFamilies);
    for (std::size_t i = 0; i < kFamilies; ++i) {
        split[i] = i;
    }

    num::Rng rng(setup.seed, "gradcheck");
    auto batch_rng = rng.split("batches");
    const auto train_batch = pairs::sample_unbalanced_batch(split, {setup.positives, setup.ratio}, batch_rng);
    const auto meta_batch = pairs::sample_balanced_batch(split, setup.positives, batch_rng);

    const models::KinshipModel model(tiny_kinship(setup.embed_dim));
    models::MinerConfig miner_config;
    miner_config.hidden = setup.miner_hidden;
    const models::MetaMiner miner(miner_config);

    auto theta_rng = rng.split("theta");
    const auto theta = model.init(theta_rng);
    auto phi_rng = rng.split("phi");
    auto phi = miner.init(phi_rng);
    // A zero head would make every weight 0.5; give it some structure.
    for (double& v : phi["miner.w1"].data()) {
        v = phi_rng.normal();
    }
    phi["miner.b1"].data()[0] = 0.5 * phi_rng.normal();

    auto analytic = engine::meta_gradient(data, model, miner, train_batch, meta_batch, theta, phi, setup.alpha);
    if (corrupt_sign) {
        auto flipped = num::GradSet::zeros_like(analytic);
        flipped.axpy(-1.0, analytic);
        analytic = std::move(flipped);
    }

    auto objective = [&](const num::ParamSet& p) {
        const auto theta_hat = engine::virtual_step(data, model, miner, train_batch, theta, p, setup.alpha);
        return engine::meta_loss(data, model, meta_batch, theta_hat);
    };
    auto numeric = num::GradSet::zeros_like(phi);
    for (std::size_t t = 0; t < phi.size(); ++t) {
        for (std::size_t k = 0; k < phi[t].size(); ++k) {
            auto plus = phi;
            auto minus = phi;
            plus[t].data()[k] += kGradcheckStep;
            minus[t].data()[k] -= kGradcheckStep;
            numeric[t].data()[k] = (objective(plus) - objective(minus)) / (2.0 * kGradcheckStep);
        }
    }

    GradcheckRow row;
    row.setup = setup;
    row.max_abs_analytic = analytic.max_abs();
    row.max_abs_numeric = numeric.max_abs();
    const double scale = std::max(row.max_abs_analytic, row.max_abs_numeric);
    row.max_rel_error = scale == 0.0 ? 0.0 : num::max_relative_error(analytic, numeric, kRelativeFloor * scale);
    row.passed = row.max_rel_error <= tolerance;
    return row;
}

bool run_gradcheck(const std::vector<GradcheckCase>& grid, std::ostream& out, bool corrupt_sign, double tolerance) {
    bool all = true;
    char line[256];
    for (const auto& setup : grid) {
        const auto row = run_gradcheck_case(setup, corrupt_sign, tolerance);
        all = all && row.passed;
        std::snprintf(line, sizeof line,
                      "D=%zu H=%zu m=%zu C=%zu alpha=%g seed=%llu  max_rel_err=%.3e  max|grad|=%.3e  %s\n",
                      setup.embed_dim, setup.miner_hidden, setup.positives, setup.ratio, setup.alpha,
                      static_cast<unsigned long long>(setup.seed), row.max_rel_error, row.max_abs_analytic,
                      row.passed ? "PASS" : "FAIL");
        out << line;
    }
    return all;
}

}  // namespace dsmm::harness
