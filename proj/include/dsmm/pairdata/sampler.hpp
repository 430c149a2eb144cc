#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dsmm/numerics/rng.hpp"
#include "dsmm/numerics/tensor.hpp"
#include "dsmm/pairdata/dataset.hpp"

namespace dsmm::pairs {

// Indices are family indices into the owning PairDataset.
struct PairSample {
    std::size_t parent = 0;
    std::size_t child = 0;
    int label = 0;  // 1 iff parent == child

    friend bool operator==(const PairSample&, const PairSample&) = default;
};

/// m positives and m * C negatives in random order.
struct Batch {
    std::vector<PairSample> samples;
    std::size_t positives = 0;  // m
    std::size_t ratio = 1;      // C

    std::size_t size() const { return samples.size(); }
    std::vector<int> labels() const;
};

struct SamplerConfig {
    std::size_t positives = 8;  // m
    std::size_t ratio = 4;      // C
};

// Throws ContractError unless the split can supply m positives and m*C distinct negatives.
void check_budget(std::size_t split_families, const SamplerConfig& config);

/// m distinct families as positives, m*C distinct ordered negatives drawn
/// uniformly from the split's implicit N_s (N_s - 1) negative space, then
/// shuffled. Sampling is without replacement inside the batch only.
Batch sample_unbalanced_batch(std::span<const std::size_t> split, const SamplerConfig& config, num::Rng& rng);

// Same with C = 1.
Batch sample_balanced_batch(std::span<const std::size_t> split, std::size_t positives, num::Rng& rng);

/// Fixed evaluation set for a split: every positive pair plus as many
/// distinct uniformly drawn negatives. Positives first, then negatives.
std::vector<PairSample> evaluation_pairs(std::span<const std::size_t> split, num::Rng& rng);

/// K disjoint folds covering {0..N-1}, sizes differing by at most one.
struct FoldSpec {
    std::vector<std::vector<std::size_t>> folds;

    std::size_t size() const { return folds.size(); }
    const std::vector<std::size_t>& test_split(std::size_t fold) const;
    // Every family not in `fold`, ascending.
    std::vector<std::size_t> train_split(std::size_t fold) const;
};

FoldSpec make_folds(std::size_t families, std::size_t k, std::uint64_t seed);

// Rows of parent / child features for a list of samples.
num::Tensor parent_features(const PairDataset& dataset, std::span<const PairSample> samples);
num::Tensor child_features(const PairDataset& dataset, std::span<const PairSample> samples);

// Iterations per epoch: ceil(split_families / m).
std::size_t iterations_per_epoch(std::size_t split_families, std::size_t positives);

}  // namespace dsmm::pairs
