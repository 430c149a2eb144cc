#include "dsmm/harness/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "dsmm/engine/trainer.hpp"
#include "dsmm/models/checkpoint.hpp"
#include "dsmm/pairdata/dataset_io.hpp"
#include "dsmm/pairdata/synthetic.hpp"

namespace dsmm::harness {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    return out;
}

void write_json(const std::filesystem::path& path, const json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << "\n";
}

std::string csv_number(double value) {
    return std::isnan(value) ? std::string("nan") : pairs::format_double(value);
}

void write_metrics(const std::filesystem::path& path, const std::vector<engine::EpochRecord>& history) {
    auto out = open_out(path);
    out << "epoch,train_loss,meta_loss,pos_weight_ratio,lr\n";
    for (const auto& r : history) {
        out << r.epoch << ',' << csv_number(r.train_loss) << ',' << csv_number(r.meta_loss) << ','
            << csv_number(r.pos_weight_ratio) << ',' << csv_number(r.lr) << '\n';
    }
}

void write_predictions(const std::filesystem::path& path, const pairs::PairDataset& data,
                       const std::vector<pairs::PairSample>& pairs_, const std::vector<double>& scores) {
    auto out = open_out(path);
    out << "parent_family,child_family,label,score\n";
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        out << data.family_id(pairs_[i].parent) << ',' << data.family_id(pairs_[i].child) << ',' << pairs_[i].label
            << ',' << pairs::format_double(scores[i]) << '\n';
    }
}

std::string run_name(const RunSpec& run) {
    return std::string(engine::to_string(run.strategy)) + "-c" + std::to_string(run.ratio);
}

json spread_json(const Spread& s) {
    return {{"mean", s.mean}, {"std", s.std}};
}

}  // namespace

std::string library_version() {
    return DSMM_VERSION;
}

pairs::PairDataset load_or_generate(const ExperimentConfig& config) {
    if (config.dataset_path) {
        return pairs::load_dataset(*config.dataset_path);
    }
    return pairs::generate_synthetic(config.generator, config.data_seed);
}

std::vector<pairs::PairSample> evaluation_set(const pairs::FoldSpec& folds, std::size_t fold,
                                              std::uint64_t fold_seed) {
    num::Rng rng(fold_seed, "eval/fold-" + std::to_string(fold));
    return pairs::evaluation_pairs(folds.test_split(fold), rng);
}

void cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out_file) {
    if (out_file.has_parent_path()) {
        std::filesystem::create_directories(out_file.parent_path());
    }
    pairs::save_dataset(pairs::generate_synthetic(config.generator, config.data_seed), out_file);
}

Spread spread(const std::vector<double>& values) {
    Spread s;
    if (values.empty()) {
        return s;
    }
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / static_cast<double>(values.size()));
    return s;
}

TrainSummary cmd_train(const ExperimentConfig& config, std::ostream* log) {
    const auto problems = validate(config);
    if (!problems.empty()) {
        throw ConfigError(problems);
    }
    const auto data = load_or_generate(config);
    require(config.folds <= data.families(), "folds: " + std::to_string(config.folds) + " folds exceed " +
                                                 std::to_string(data.families()) + " families");
    const auto folds = pairs::make_folds(data.families(), config.folds, config.fold_seed);
    const auto fold_ids = folds_to_run(config);

    std::filesystem::create_directories(config.out);
    write_json(config.out / "config.json", to_json(config));

    TrainSummary summary;
    json timing = {{"runs", json::array()}};
    const auto start_all = std::chrono::steady_clock::now();
    for (const auto& run : expand_runs(config)) {
        auto train_config = train_config_for(config, run);
        train_config.kinship.input_dim = data.dim();
        const models::KinshipModel model(train_config.kinship);

        RunResult result;
        result.spec = run;
        result.dir = config.out / run_name(run) / ("seed-" + std::to_string(run.seed));
        std::vector<double> accs;
        std::vector<double> aucs;
        for (std::size_t fold : fold_ids) {
            const auto fold_dir = result.dir / ("fold-" + std::to_string(fold));
            std::filesystem::create_directories(fold_dir);
            const auto start = std::chrono::steady_clock::now();

            const auto split = folds.train_split(fold);
            const auto state = engine::train(data, split, train_config);
            const auto test = evaluation_set(folds, fold, config.fold_seed);
            const auto scores = engine::predict_pairs(data, model, state.theta, test);
            std::vector<int> labels;
            for (const auto& s : test) labels.push_back(s.label);
            const auto report = metrics::evaluate(scores, labels, 0.5);

            write_metrics(fold_dir / "metrics.csv", state.history);
            write_predictions(fold_dir / "predictions.csv", data, test, scores);
            models::Checkpoint checkpoint{train_config.kinship, state.theta, std::nullopt, {}};
            if (state.phi) {
                checkpoint.miner = train_config.miner;
                checkpoint.phi = *state.phi;
            }
            models::save_checkpoint(checkpoint, fold_dir / "checkpoint.json");

            FoldResult fr{fold, report.accuracy, report.roc.auc, state.weight_fallbacks};
            result.folds.push_back(fr);
            accs.push_back(fr.accuracy);
            aucs.push_back(fr.auc);

            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            timing["runs"].push_back({{"run", run_name(run)}, {"seed", run.seed}, {"fold", fold}, {"seconds", seconds}});
            if (log) {
                char line[200];
                std::snprintf(line, sizeof line, "%s seed=%llu fold=%zu accuracy=%.4f auc=%.4f (%.1fs)\n",
                              run_name(run).c_str(), static_cast<unsigned long long>(run.seed), fold, fr.accuracy,
                              fr.auc, seconds);
                *log << line << std::flush;
            }
        }
        result.accuracy = spread(accs);
        result.auc = spread(aucs);
        summary.runs.push_back(std::move(result));
    }

    json runs = json::array();
    for (const auto& r : summary.runs) {
        json fold_rows = json::array();
        for (const auto& f : r.folds) {
            fold_rows.push_back({{"fold", f.fold},
                                 {"accuracy", f.accuracy},
                                 {"auc", f.auc},
                                 {"weight_fallbacks", f.weight_fallbacks}});
        }
        runs.push_back({{"strategy", std::string(engine::to_string(r.spec.strategy))},
                        {"c", r.spec.ratio},
                        {"seed", r.spec.seed},
                        {"folds", fold_rows},
                        {"accuracy", spread_json(r.accuracy)},
                        {"auc", spread_json(r.auc)}});
    }
    // Pool folds over seeds for each (strategy, c).
    json groups = json::array();
    for (auto strategy : config.strategies) {
        for (auto ratio : config.ratios) {
            std::vector<double> accs;
            std::vector<double> aucs;
            for (const auto& r : summary.runs) {
                if (r.spec.strategy != strategy || r.spec.ratio != ratio) continue;
                for (const auto& f : r.folds) {
                    accs.push_back(f.accuracy);
                    aucs.push_back(f.auc);
                }
            }
            groups.push_back({{"strategy", std::string(engine::to_string(strategy))},
                              {"c", ratio},
                              {"accuracy", spread_json(spread(accs))},
                              {"auc", spread_json(spread(aucs))}});
        }
    }
    write_json(config.out / "summary.json", {{"version", library_version()}, {"runs", runs}, {"groups", groups}});

    timing["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_all).count();
    write_json(config.out / "timing.json", timing);
    return summary;
}

metrics::EvalReport cmd_eval(const EvalOptions& options) {
    const auto data = pairs::load_dataset(options.dataset);
    require(options.folds >= 2 && options.folds <= data.families(),
            "folds must be in [2, " + std::to_string(data.families()) + "]");
    require(options.fold < options.folds, "fold " + std::to_string(options.fold) + " is out of range");
    const auto folds = pairs::make_folds(data.families(), options.folds, options.fold_seed);
    const auto test = evaluation_set(folds, options.fold, options.fold_seed);

    std::vector<double> scores;
    double threshold = 0.5;
    if (options.scorer == Scorer::bayes) {
        require(data.generator().has_value(), "bayes scorer needs generator metadata in the dataset header");
        for (const auto& s : test) {
            scores.push_back(pairs::bayes_llr(data.parent(s.parent), data.child(s.child), *data.generator()));
        }
        threshold = 0.0;
    } else {
        require(options.checkpoint.has_value(), "model scorer needs a checkpoint");
        const auto checkpoint = models::load_checkpoint(*options.checkpoint);
        if (checkpoint.kinship.input_dim != data.dim()) {
            throw ContractError("dimension mismatch: checkpoint expects inputs of shape [*, " +
                                std::to_string(checkpoint.kinship.input_dim) + "], dataset rows have shape [*, " +
                                std::to_string(data.dim()) + "]");
        }
        const models::KinshipModel model(checkpoint.kinship);
        scores = engine::predict_pairs(data, model, checkpoint.theta, test);
    }
    if (options.threshold) {
        threshold = *options.threshold;
    }
    std::vector<int> labels;
    for (const auto& s : test) labels.push_back(s.label);
    const auto report = metrics::evaluate(scores, labels, threshold);

    std::filesystem::create_directories(options.out);
    {
        auto out = open_out(options.out / "roc.csv");
        out << "threshold,fpr,tpr\n";
        for (const auto& p : report.roc.points) {
            out << pairs::format_double(p.threshold) << ',' << pairs::format_double(p.fpr) << ','
                << pairs::format_double(p.tpr) << '\n';
        }
    }
    write_json(options.out / "report.json", {{"version", library_version()},
                                             {"scorer", options.scorer == Scorer::bayes ? "bayes" : "model"},
                                             {"fold", options.fold},
                                             {"folds", options.folds},
                                             {"fold_seed", options.fold_seed},
                                             {"pairs", test.size()},
                                             {"threshold", threshold},
                                             {"accuracy", report.accuracy},
                                             {"auc", report.roc.auc}});
    return report;
}

}  // namespace dsmm::harness
