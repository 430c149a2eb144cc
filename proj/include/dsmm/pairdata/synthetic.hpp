#pragma once

#include <cstdint>
#include <span>

#include "dsmm/pairdata/dataset.hpp"

namespace dsmm::pairs {

/// Correlated-Gaussian kinship surrogate.
///
/// Per family: parent latent u ~ N(0, I_d), child latent v = rho u + sqrt(1 - rho^2) w
/// with w ~ N(0, I_d). Linear mode observes latent + sigma * noise; nonlinear
/// mode observes tanh(A latent) + sigma * noise for one fixed random A shared
/// by all entities. Family i draws from its own stream, so the output depends
/// only on (config, seed).
PairDataset generate_synthetic(const GeneratorConfig& config, std::uint64_t seed);

/// Closed-form log-likelihood ratio log p(u, v | kin) - log p(u, v | not kin)
/// for linear-mode data. Per coordinate, with s = 1 + sigma^2:
///   kin:     N(0, [[s, rho], [rho, s]])
///   not kin: N(0, [[s, 0], [0, s]])
/// Throws ContractError for nonlinear-mode metadata.
double bayes_llr(std::span<const double> parent, std::span<const double> child, const GeneratorMeta& meta);

}  // namespace dsmm::pairs
