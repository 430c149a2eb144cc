#include "dsmm/models/checkpoint.hpp"

#include <fstream>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::models {

namespace {

constexpr const char* kFormat = "dsmm-checkpoint v1";

nlohmann::json tensors_to_json(const num::ParamSet& params) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.push_back({{"name", params.name(i)},
                       {"shape", params[i].shape()},
                       {"data", std::vector<double>(params[i].data().begin(), params[i].data().end())}});
    }
    return out;
}

num::ParamSet tensors_from_json(const nlohmann::json& doc) {
    num::ParamSet params;
    for (const auto& entry : doc) {
        params.add(entry.at("name").get<std::string>(),
                   num::Tensor(entry.at("shape").get<std::vector<std::size_t>>(),
                               entry.at("data").get<std::vector<double>>()));
    }
    return params;
}

}  // namespace

nlohmann::json to_json(const KinshipConfig& c) {
    return {{"input_dim", c.input_dim},
            {"encoder_hidden", c.encoder_hidden},
            {"embed_dim", c.embed_dim},
            {"encoder_hidden_act", to_string(c.encoder_hidden_act)},
            {"encoder_output_act", to_string(c.encoder_output_act)},
            {"relation_hidden", c.relation_hidden},
            {"relation_out", c.relation_out},
            {"aggregator_hidden", c.aggregator_hidden}};
}

KinshipConfig kinship_config_from_json(const nlohmann::json& doc) {
    KinshipConfig c;
    c.input_dim = doc.at("input_dim").get<std::size_t>();
    c.encoder_hidden = doc.at("encoder_hidden").get<std::vector<std::size_t>>();
    c.embed_dim = doc.at("embed_dim").get<std::size_t>();
    c.encoder_hidden_act = parse_activation(doc.at("encoder_hidden_act").get<std::string>());
    c.encoder_output_act = parse_activation(doc.at("encoder_output_act").get<std::string>());
    c.relation_hidden = doc.at("relation_hidden").get<std::vector<std::size_t>>();
    c.relation_out = doc.at("relation_out").get<std::size_t>();
    c.aggregator_hidden = doc.at("aggregator_hidden").get<std::vector<std::size_t>>();
    return c;
}

nlohmann::json to_json(const MinerConfig& c) {
    return {{"hidden", c.hidden}, {"hidden_act", to_string(c.hidden_act)}, {"loss_cap", c.loss_cap}};
}

MinerConfig miner_config_from_json(const nlohmann::json& doc) {
    MinerConfig c;
    c.hidden = doc.at("hidden").get<std::size_t>();
    c.hidden_act = parse_activation(doc.at("hidden_act").get<std::string>());
    c.loss_cap = doc.at("loss_cap").get<double>();
    return c;
}

nlohmann::json to_json(const Checkpoint& checkpoint) {
    nlohmann::json doc;
    doc["format"] = kFormat;
    doc["kinship"] = to_json(checkpoint.kinship);
    doc["theta"] = tensors_to_json(checkpoint.theta);
    if (checkpoint.miner) {
        doc["miner"] = to_json(*checkpoint.miner);
        doc["phi"] = tensors_to_json(checkpoint.phi);
    }
    return doc;
}

Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
    try {
        require(doc.at("format").get<std::string>() == kFormat,
                "checkpoint: unsupported format '" + doc.at("format").get<std::string>() + "'");
        Checkpoint checkpoint;
        checkpoint.kinship = kinship_config_from_json(doc.at("kinship"));
        checkpoint.theta = tensors_from_json(doc.at("theta"));
        KinshipModel(checkpoint.kinship).check_params(checkpoint.theta);
        if (doc.contains("miner")) {
            checkpoint.miner = miner_config_from_json(doc.at("miner"));
            checkpoint.phi = tensors_from_json(doc.at("phi"));
            MetaMiner(*checkpoint.miner).check_params(checkpoint.phi);
        }
        return checkpoint;
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(std::string("checkpoint: malformed document: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << to_json(checkpoint).dump(1) << '\n';
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ContractError(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(doc);
}

}  // namespace dsmm::models
