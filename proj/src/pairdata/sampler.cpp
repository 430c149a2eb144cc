#include "dsmm/pairdata/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::pairs {

namespace {

// `count` distinct elements of `split`, uniform, by partial Fisher-Yates.
std::vector<std::size_t> draw_distinct(std::span<const std::size_t> split, std::size_t count, num::Rng& rng) {
    std::vector<std::size_t> pool(split.begin(), split.end());
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

// `count` distinct ordered (i, j), i != j, over split positions.
std::vector<PairSample> draw_negatives(std::span<const std::size_t> split, std::size_t count, num::Rng& rng) {
    const std::uint64_t n = split.size();
    std::unordered_set<std::uint64_t> seen;
    std::vector<PairSample> out;
    out.reserve(count);
    while (out.size() < count) {
        const std::uint64_t i = rng.below(n);
        std::uint64_t j = rng.below(n - 1);
        if (j >= i) {
            ++j;
        }
        if (seen.insert(i * n + j).second) {
            out.push_back({split[i], split[j], 0});
        }
    }
    return out;
}

}  // namespace

std::vector<int> Batch::labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(s.label);
    }
    return out;
}

void check_budget(std::size_t split_families, const SamplerConfig& config) {
    require(config.positives >= 1, "sampler: m must be >= 1");
    require(config.ratio >= 1, "sampler: C must be >= 1");
    require(split_families >= config.positives,
            "sampler: split has " + std::to_string(split_families) + " families, fewer than m = " +
                std::to_string(config.positives));
    require(negative_count(split_families) >= config.positives * config.ratio,
            "sampler: split has only " + std::to_string(negative_count(split_families)) +
                " negative pairs, fewer than m*C = " + std::to_string(config.positives * config.ratio));
}

Batch sample_unbalanced_batch(std::span<const std::size_t> split, const SamplerConfig& config, num::Rng& rng) {
    check_budget(split.size(), config);
    Batch batch;
    batch.positives = config.positives;
    batch.ratio = config.ratio;
    batch.samples.reserve(config.positives * (1 + config.ratio));
    for (std::size_t family : draw_distinct(split, config.positives, rng)) {
        batch.samples.push_back({family, family, 1});
    }
    for (const auto& negative : draw_negatives(split, config.positives * config.ratio, rng)) {
        batch.samples.push_back(negative);
    }
    rng.shuffle(std::span<PairSample>(batch.samples));
    return batch;
}

Batch sample_balanced_batch(std::span<const std::size_t> split, std::size_t positives, num::Rng& rng) {
    return sample_unbalanced_batch(split, SamplerConfig{positives, 1}, rng);
}

std::vector<PairSample> evaluation_pairs(std::span<const std::size_t> split, num::Rng& rng) {
    require(split.size() >= 2, "evaluation pairs need at least 2 families");
    std::vector<PairSample> out;
    out.reserve(2 * split.size());
    for (std::size_t family : split) {
        out.push_back({family, family, 1});
    }
    for (const auto& negative : draw_negatives(split, split.size(), rng)) {
        out.push_back(negative);
    }
    return out;
}

const std::vector<std::size_t>& FoldSpec::test_split(std::size_t fold) const {
    require(fold < folds.size(), "fold index out of range");
    return folds[fold];
}

std::vector<std::size_t> FoldSpec::train_split(std::size_t fold) const {
    require(fold < folds.size(), "fold index out of range");
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (f != fold) {
            out.insert(out.end(), folds[f].begin(), folds[f].end());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

FoldSpec make_folds(std::size_t families, std::size_t k, std::uint64_t seed) {
    require(k >= 1, "folds: K must be >= 1");
    require(families >= k, "folds: N = " + std::to_string(families) + " is smaller than K = " + std::to_string(k));
    std::vector<std::size_t> order(families);
    std::iota(order.begin(), order.end(), std::size_t{0});
    num::Rng rng(seed, "folds");
    rng.shuffle(std::span<std::size_t>(order));

    FoldSpec spec;
    spec.folds.resize(k);
    const std::size_t base = families / k;
    const std::size_t extra = families % k;
    std::size_t cursor = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t count = base + (f < extra ? 1 : 0);
        spec.folds[f].assign(order.begin() + cursor, order.begin() + cursor + count);
        std::sort(spec.folds[f].begin(), spec.folds[f].end());
        cursor += count;
    }
    return spec;
}

num::Tensor parent_features(const PairDataset& dataset, std::span<const PairSample> samples) {
    num::Tensor out = num::Tensor::matrix(samples.size(), dataset.dim());
    for (std::size_t r = 0; r < samples.size(); ++r) {
        auto src = dataset.parent(samples[r].parent);
        std::copy(src.begin(), src.end(), out.data().begin() + r * dataset.dim());
    }
    return out;
}

num::Tensor child_features(const PairDataset& dataset, std::span<const PairSample> samples) {
    num::Tensor out = num::Tensor::matrix(samples.size(), dataset.dim());
    for (std::size_t r = 0; r < samples.size(); ++r) {
        auto src = dataset.child(samples[r].child);
        std::copy(src.begin(), src.end(), out.data().begin() + r * dataset.dim());
    }
    return out;
}

std::size_t iterations_per_epoch(std::size_t split_families, std::size_t positives) {
    require(positives >= 1, "m must be >= 1");
    return (split_families + positives - 1) / positives;
}

}  // namespace dsmm::pairs
