#include "dsmm/harness/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>

namespace dsmm::harness {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::string text = "invalid experiment config:";
    for (const auto& p : problems) {
        text += "\n  " + p;
    }
    return text;
}

std::uint64_t as_uint(const json& j) {
    if (j.is_number_unsigned()) {
        return j.get<std::uint64_t>();
    }
    if (j.is_number_integer()) {
        const auto v = j.get<std::int64_t>();
        require(v >= 0, "must be non-negative");
        return static_cast<std::uint64_t>(v);
    }
    throw ContractError("expected a non-negative integer, got " + j.dump());
}

double as_double(const json& j) {
    require(j.is_number(), "expected a number, got " + j.dump());
    return j.get<double>();
}

bool as_bool(const json& j) {
    require(j.is_boolean(), "expected true or false, got " + j.dump());
    return j.get<bool>();
}

std::string as_string(const json& j) {
    require(j.is_string(), "expected a string, got " + j.dump());
    return j.get<std::string>();
}

template <typename T, typename F>
std::vector<T> as_list(const json& j, F&& item) {
    std::vector<T> out;
    if (!j.is_array()) {
        out.push_back(item(j));
        return out;
    }
    for (const auto& element : j) {
        out.push_back(item(element));
    }
    return out;
}

std::vector<std::size_t> as_sizes(const json& j) {
    require(j.is_array(), "expected a list of non-negative integers, got " + j.dump());
    return as_list<std::size_t>(j, [](const json& e) { return static_cast<std::size_t>(as_uint(e)); });
}

using Setter = std::function<void(ExperimentConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"dataset", [](ExperimentConfig& c, const json& j) { c.dataset_path = as_string(j); }},
        {"families", [](ExperimentConfig& c, const json& j) { c.generator.families = as_uint(j); }},
        {"dim", [](ExperimentConfig& c, const json& j) { c.generator.dim = as_uint(j); }},
        {"rho", [](ExperimentConfig& c, const json& j) { c.generator.rho = as_double(j); }},
        {"sigma", [](ExperimentConfig& c, const json& j) { c.generator.sigma = as_double(j); }},
        {"mode", [](ExperimentConfig& c, const json& j) { c.generator.mode = pairs::parse_mode(as_string(j)); }},
        {"data_seed", [](ExperimentConfig& c, const json& j) { c.data_seed = as_uint(j); }},
        {"strategy",
         [](ExperimentConfig& c, const json& j) {
             c.strategies = as_list<engine::Strategy>(j, [](const json& e) { return engine::parse_strategy(as_string(e)); });
         }},
        {"c",
         [](ExperimentConfig& c, const json& j) {
             c.ratios = as_list<std::size_t>(j, [](const json& e) { return static_cast<std::size_t>(as_uint(e)); });
         }},
        {"m", [](ExperimentConfig& c, const json& j) { c.train.positives = as_uint(j); }},
        {"epochs", [](ExperimentConfig& c, const json& j) { c.train.epochs = as_uint(j); }},
        {"alpha", [](ExperimentConfig& c, const json& j) { c.train.alpha = as_double(j); }},
        {"beta", [](ExperimentConfig& c, const json& j) { c.train.beta = as_double(j); }},
        {"gamma", [](ExperimentConfig& c, const json& j) { c.train.gamma = as_double(j); }},
        {"optimizer",
         [](ExperimentConfig& c, const json& j) { c.train.actual_optimizer = engine::parse_optimizer(as_string(j)); }},
        {"meta_optimizer",
         [](ExperimentConfig& c, const json& j) { c.train.meta_optimizer = engine::parse_optimizer(as_string(j)); }},
        {"lr_decay", [](ExperimentConfig& c, const json& j) { c.train.lr_decay = as_double(j); }},
        {"milestones", [](ExperimentConfig& c, const json& j) { c.train.milestones = as_sizes(j); }},
        {"focal_gamma", [](ExperimentConfig& c, const json& j) { c.train.focal_gamma = as_double(j); }},
        {"freeze_miner", [](ExperimentConfig& c, const json& j) { c.train.freeze_miner = as_bool(j); }},
        {"encoder_hidden", [](ExperimentConfig& c, const json& j) { c.train.kinship.encoder_hidden = as_sizes(j); }},
        {"embed_dim", [](ExperimentConfig& c, const json& j) { c.train.kinship.embed_dim = as_uint(j); }},
        {"encoder_hidden_act",
         [](ExperimentConfig& c, const json& j) {
             c.train.kinship.encoder_hidden_act = models::parse_activation(as_string(j));
         }},
        {"encoder_output_act",
         [](ExperimentConfig& c, const json& j) {
             c.train.kinship.encoder_output_act = models::parse_activation(as_string(j));
         }},
        {"relation_hidden", [](ExperimentConfig& c, const json& j) { c.train.kinship.relation_hidden = as_sizes(j); }},
        {"relation_out", [](ExperimentConfig& c, const json& j) { c.train.kinship.relation_out = as_uint(j); }},
        {"aggregator_hidden",
         [](ExperimentConfig& c, const json& j) { c.train.kinship.aggregator_hidden = as_sizes(j); }},
        {"miner_hidden", [](ExperimentConfig& c, const json& j) { c.train.miner.hidden = as_uint(j); }},
        {"miner_act",
         [](ExperimentConfig& c, const json& j) { c.train.miner.hidden_act = models::parse_activation(as_string(j)); }},
        {"loss_cap", [](ExperimentConfig& c, const json& j) { c.train.miner.loss_cap = as_double(j); }},
        {"folds", [](ExperimentConfig& c, const json& j) { c.folds = as_uint(j); }},
        {"fold_seed", [](ExperimentConfig& c, const json& j) { c.fold_seed = as_uint(j); }},
        {"run_folds", [](ExperimentConfig& c, const json& j) { c.run_folds = as_sizes(j); }},
        {"seeds",
         [](ExperimentConfig& c, const json& j) {
             c.seeds = as_list<std::uint64_t>(j, [](const json& e) { return as_uint(e); });
         }},
        {"out", [](ExperimentConfig& c, const json& j) { c.out = as_string(j); }},
    };
    return table;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ContractError(join_problems(problems)), problems_(std::move(problems)) {}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) {
        throw ConfigError({"config must be a JSON object"});
    }
    ExperimentConfig config;
    std::vector<std::string> problems;
    const auto& table = setters();
    for (const auto& [key, value] : doc.items()) {
        const auto it = table.find(key);
        if (it == table.end()) {
            problems.push_back("unknown key '" + key + "'");
            continue;
        }
        try {
            it->second(config, value);
        } catch (const std::exception& e) {
            problems.push_back(key + ": " + e.what());
        }
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
    config.train.kinship.input_dim = config.generator.dim;
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ContractError("cannot open config file '" + path.string() + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ContractError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
    json doc;
    if (c.dataset_path) {
        doc["dataset"] = c.dataset_path->string();
    }
    doc["families"] = c.generator.families;
    doc["dim"] = c.generator.dim;
    doc["rho"] = c.generator.rho;
    doc["sigma"] = c.generator.sigma;
    doc["mode"] = std::string(pairs::to_string(c.generator.mode));
    doc["data_seed"] = c.data_seed;
    doc["strategy"] = json::array();
    for (auto s : c.strategies) {
        doc["strategy"].push_back(std::string(engine::to_string(s)));
    }
    doc["c"] = c.ratios;
    const auto& t = c.train;
    doc["m"] = t.positives;
    doc["epochs"] = t.epochs;
    doc["alpha"] = t.alpha;
    doc["beta"] = t.beta;
    doc["gamma"] = t.gamma;
    doc["optimizer"] = std::string(engine::to_string(t.actual_optimizer));
    doc["meta_optimizer"] = std::string(engine::to_string(t.meta_optimizer));
    doc["lr_decay"] = t.lr_decay;
    doc["milestones"] = t.milestones;
    doc["focal_gamma"] = t.focal_gamma;
    doc["freeze_miner"] = t.freeze_miner;
    doc["encoder_hidden"] = t.kinship.encoder_hidden;
    doc["embed_dim"] = t.kinship.embed_dim;
    doc["encoder_hidden_act"] = models::to_string(t.kinship.encoder_hidden_act);
    doc["encoder_output_act"] = models::to_string(t.kinship.encoder_output_act);
    doc["relation_hidden"] = t.kinship.relation_hidden;
    doc["relation_out"] = t.kinship.relation_out;
    doc["aggregator_hidden"] = t.kinship.aggregator_hidden;
    doc["miner_hidden"] = t.miner.hidden;
    doc["miner_act"] = models::to_string(t.miner.hidden_act);
    doc["loss_cap"] = t.miner.loss_cap;
    doc["folds"] = c.folds;
    doc["fold_seed"] = c.fold_seed;
    doc["run_folds"] = c.run_folds;
    doc["seeds"] = c.seeds;
    doc["out"] = c.out.string();
    return doc;
}

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> problems;
    if (c.dataset_path) {
        if (!std::filesystem::exists(*c.dataset_path)) {
            problems.push_back("dataset: file '" + c.dataset_path->string() + "' does not exist");
        }
    } else {
        try {
            pairs::validate(c.generator);
        } catch (const ContractError& e) {
            problems.push_back(e.what());
        }
        if (c.folds > c.generator.families) {
            problems.push_back("folds: " + std::to_string(c.folds) + " folds exceed " +
                               std::to_string(c.generator.families) + " families");
        }
    }
    if (c.strategies.empty()) problems.push_back("strategy: list is empty");
    if (c.ratios.empty()) problems.push_back("c: list is empty");
    if (c.seeds.empty()) problems.push_back("seeds: list is empty");
    if (c.folds < 2) problems.push_back("folds: must be >= 2");
    if (c.train.kinship.embed_dim < 1) problems.push_back("embed_dim: must be >= 1");
    if (c.train.kinship.relation_out < 1) problems.push_back("relation_out: must be >= 1");
    if (c.train.miner.hidden < 1) problems.push_back("miner_hidden: must be >= 1");
    if (!(c.train.miner.loss_cap > 0.0)) problems.push_back("loss_cap: must be > 0");
    std::set<std::size_t> seen;
    for (std::size_t f : c.run_folds) {
        if (f >= c.folds) problems.push_back("run_folds: fold " + std::to_string(f) + " is out of range");
        if (!seen.insert(f).second) problems.push_back("run_folds: fold " + std::to_string(f) + " repeats");
    }
    std::set<std::string> train_problems;
    for (const auto& run : expand_runs(c)) {
        for (const auto& p : engine::validate(train_config_for(c, run))) {
            train_problems.insert(p);
        }
    }
    problems.insert(problems.end(), train_problems.begin(), train_problems.end());
    return problems;
}

std::vector<std::size_t> folds_to_run(const ExperimentConfig& config) {
    if (!config.run_folds.empty()) {
        return config.run_folds;
    }
    std::vector<std::size_t> all(config.folds);
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    return all;
}

std::vector<RunSpec> expand_runs(const ExperimentConfig& config) {
    std::vector<RunSpec> runs;
    for (auto strategy : config.strategies) {
        for (auto ratio : config.ratios) {
            for (auto seed : config.seeds) {
                runs.push_back({strategy, ratio, seed});
            }
        }
    }
    return runs;
}

engine::TrainConfig train_config_for(const ExperimentConfig& config, const RunSpec& run) {
    engine::TrainConfig train = config.train;
    train.strategy = run.strategy;
    train.ratio = run.ratio;
    train.seed = run.seed;
    return train;
}

}  // namespace dsmm::harness
