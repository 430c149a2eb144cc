#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dsmm/harness/config.hpp"
#include "dsmm/metrics/metrics.hpp"
#include "dsmm/pairdata/dataset.hpp"
#include "dsmm/pairdata/sampler.hpp"

namespace dsmm::harness {

std::string library_version();

// Dataset named by the config: read from `dataset` or generated.
pairs::PairDataset load_or_generate(const ExperimentConfig& config);

// Test pairs of one fold. Depends only on the folds and fold_seed, so every
// strategy and seed is scored on the same pairs.
std::vector<pairs::PairSample> evaluation_set(const pairs::FoldSpec& folds, std::size_t fold,
                                              std::uint64_t fold_seed);

// Writes the generated dataset to `out_file`.
void cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out_file);

struct FoldResult {
    std::size_t fold = 0;
    double accuracy = 0.0;
    double auc = 0.0;
    std::size_t weight_fallbacks = 0;
};

struct Spread {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

Spread spread(const std::vector<double>& values);

struct RunResult {
    RunSpec spec;
    std::filesystem::path dir;
    std::vector<FoldResult> folds;
    Spread accuracy;
    Spread auc;
};

struct TrainSummary {
    std::vector<RunResult> runs;
};

/// Trains every (strategy, c, seed) run on every selected fold.
///
/// Layout under config.out:
///   config.json, summary.json, timing.json
///   <strategy>-c<C>/seed-<s>/fold-<k>/{metrics.csv, predictions.csv, checkpoint.json}
/// Everything except timing.json is a pure function of the config.
/// `log` receives one progress line per fold.
TrainSummary cmd_train(const ExperimentConfig& config, std::ostream* log = nullptr);

enum class Scorer { model, bayes };

struct EvalOptions {
    std::optional<std::filesystem::path> checkpoint;  // required for Scorer::model
    std::filesystem::path dataset;
    std::size_t fold = 0;
    std::size_t folds = 5;
    std::uint64_t fold_seed = 0;
    Scorer scorer = Scorer::model;
    std::optional<double> threshold;  // default 0.5 for the model, 0 for bayes log-ratios
    std::filesystem::path out = "eval";
};

// Writes roc.csv and report.json under options.out.
metrics::EvalReport cmd_eval(const EvalOptions& options);

}  // namespace dsmm::harness
