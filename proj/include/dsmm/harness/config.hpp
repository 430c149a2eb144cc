#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsmm/engine/trainer.hpp"
#include "dsmm/numerics/errors.hpp"
#include "dsmm/pairdata/dataset.hpp"

namespace dsmm::harness {

// Carries every problem found in a config, not just the first.
class ConfigError : public ContractError {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Flat experiment description. JSON keys (all optional):
///
///   dataset            path to a dataset file; otherwise one is generated from
///   families, dim, rho, sigma, mode, data_seed
///   strategy           name or list of names
///   c                  ratio C, integer or list
///   m, epochs, alpha, beta, gamma, optimizer, meta_optimizer, lr_decay,
///   milestones, focal_gamma, freeze_miner
///   encoder_hidden, embed_dim, encoder_hidden_act, encoder_output_act,
///   relation_hidden, relation_out, aggregator_hidden
///   miner_hidden, miner_act, loss_cap
///   folds, fold_seed, run_folds (subset of fold indices), seeds, out
///
/// Lists in `strategy` and `c` expand to their cross product.
struct ExperimentConfig {
    std::optional<std::filesystem::path> dataset_path;
    pairs::GeneratorConfig generator;
    std::uint64_t data_seed = 0;

    engine::TrainConfig train;  // strategy and ratio are taken from the lists below
    std::vector<engine::Strategy> strategies = {engine::Strategy::dsmm};
    std::vector<std::size_t> ratios = {4};

    std::size_t folds = 5;
    std::uint64_t fold_seed = 0;
    std::vector<std::size_t> run_folds;  // empty: all folds
    std::vector<std::uint64_t> seeds = {0};
    std::filesystem::path out = "runs";
};

// Throws ConfigError listing every unknown key and every bad value.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Complete snapshot, every key spelled out; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& config);

// Semantic checks that parse_config cannot do alone (dataset file present, ...).
std::vector<std::string> validate(const ExperimentConfig& config);

std::vector<std::size_t> folds_to_run(const ExperimentConfig& config);

struct RunSpec {
    engine::Strategy strategy;
    std::size_t ratio;
    std::uint64_t seed;
};

// strategies x ratios x seeds, in that nesting order.
std::vector<RunSpec> expand_runs(const ExperimentConfig& config);

// TrainConfig for one run.
engine::TrainConfig train_config_for(const ExperimentConfig& config, const RunSpec& run);

}  // namespace dsmm::harness
