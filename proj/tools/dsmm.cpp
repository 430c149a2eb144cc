#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dsmm/engine/trainer.hpp"
#include "dsmm/harness/commands.hpp"
#include "dsmm/harness/config.hpp"
#include "dsmm/harness/gradcheck.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

struct Overrides {
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> strategies;
    std::vector<std::size_t> ratios;
    std::optional<std::size_t> epochs;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "experiment config (JSON)");
    cmd->add_option("--out", o.out, "output path");
    cmd->add_option("--seed", o.seed, "seed (replaces the config's seeds / data_seed)");
}

dsmm::harness::ExperimentConfig resolve(const Overrides& o, bool for_generate) {
    auto config = o.config ? dsmm::harness::load_config(*o.config) : dsmm::harness::parse_config(nlohmann::json::object());
    if (o.seed) {
        if (for_generate) {
            config.data_seed = *o.seed;
        } else {
            config.seeds = {*o.seed};
        }
    }
    if (!o.strategies.empty()) {
        config.strategies.clear();
        for (const auto& s : o.strategies) config.strategies.push_back(dsmm::engine::parse_strategy(s));
    }
    if (!o.ratios.empty()) config.ratios = o.ratios;
    if (o.epochs) config.train.epochs = *o.epochs;
    if (o.out && !for_generate) config.out = *o.out;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dsmm: discriminative sample meta-mining experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", dsmm::harness::library_version());

    Overrides gen_opts;
    auto* generate = app.add_subcommand("generate", "write a synthetic pair dataset");
    add_common(generate, gen_opts);

    Overrides train_opts;
    auto* train = app.add_subcommand("train", "train every strategy x c x seed run over the folds");
    add_common(train, train_opts);
    train->add_option("--strategy", train_opts.strategies, "strategy name(s)");
    train->add_option("--c", train_opts.ratios, "negative ratio(s) C");
    train->add_option("--epochs", train_opts.epochs, "epochs per run");

    dsmm::harness::EvalOptions eval_opts;
    std::string checkpoint;
    std::string scorer = "model";
    std::optional<double> threshold;
    std::string eval_out = "eval";
    auto* eval = app.add_subcommand("eval", "score one test fold and write roc.csv and report.json");
    eval->add_option("--checkpoint", checkpoint, "checkpoint.json from a training run");
    eval->add_option("--dataset", eval_opts.dataset, "dataset file")->required();
    eval->add_option("--fold", eval_opts.fold, "test fold index");
    eval->add_option("--folds", eval_opts.folds, "number of folds K");
    eval->add_option("--fold-seed", eval_opts.fold_seed, "fold assignment seed");
    eval->add_option("--scorer", scorer, "model or bayes")->check(CLI::IsMember({"model", "bayes"}));
    eval->add_option("--threshold", threshold, "decision threshold");
    eval->add_option("--out", eval_out, "output directory");

    bool corrupt_sign = false;
    std::vector<std::size_t> dims;
    auto* gradcheck = app.add_subcommand("gradcheck", "compare the meta-gradient with finite differences");
    gradcheck->add_option("--dims", dims, "embedding sizes D to check (default 2 4 8)");
    gradcheck->add_flag("--corrupt-sign", corrupt_sign, "negate the analytic gradient (should fail)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            const auto config = resolve(gen_opts, true);
            const std::string path = gen_opts.out.value_or("pairs.csv");
            dsmm::harness::cmd_generate(config, path);
            std::cout << "wrote " << path << "\n";
        } else if (*train) {
            const auto config = resolve(train_opts, false);
            const auto summary = dsmm::harness::cmd_train(config, &std::cout);
            for (const auto& run : summary.runs) {
                std::cout << dsmm::engine::to_string(run.spec.strategy) << " c=" << run.spec.ratio
                          << " seed=" << run.spec.seed << " mean accuracy=" << run.accuracy.mean
                          << " mean auc=" << run.auc.mean << "\n";
            }
            std::cout << "results in " << config.out.string() << "\n";
        } else if (*eval) {
            if (!checkpoint.empty()) eval_opts.checkpoint = checkpoint;
            eval_opts.scorer = scorer == "bayes" ? dsmm::harness::Scorer::bayes : dsmm::harness::Scorer::model;
            eval_opts.threshold = threshold;
            eval_opts.out = eval_out;
            const auto report = dsmm::harness::cmd_eval(eval_opts);
            std::cout << "accuracy=" << report.accuracy << " auc=" << report.roc.auc << "\n";
        } else if (*gradcheck) {
            auto grid = dsmm::harness::default_grid();
            if (!dims.empty()) {
                std::erase_if(grid, [&](const auto& c) {
                    return c.alpha != 0.0 && std::find(dims.begin(), dims.end(), c.embed_dim) == dims.end();
                });
            }
            const bool ok = dsmm::harness::run_gradcheck(grid, std::cout, corrupt_sign);
            std::cout << (ok ? "all configurations passed" : "gradient check FAILED") << "\n";
            return ok ? 0 : kExitNumeric;
        }
    } catch (const dsmm::harness::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const dsmm::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
