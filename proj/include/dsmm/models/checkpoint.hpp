#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "dsmm/models/kinship.hpp"
#include "dsmm/models/miner.hpp"
#include "dsmm/numerics/params.hpp"

namespace dsmm::models {

/// Everything needed to rebuild trained networks.
///
/// Stored as JSON: a "format" tag, both architectures, and every tensor as
/// {name, shape, data}. Doubles are written shortest-round-trip, so a
/// save/load cycle reproduces every bit.
struct Checkpoint {
    KinshipConfig kinship;
    num::ParamSet theta;
    std::optional<MinerConfig> miner;
    num::ParamSet phi;
};

nlohmann::json to_json(const Checkpoint& checkpoint);
// Throws ContractError on a malformed document or architecture/tensor mismatch.
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const KinshipConfig& config);
KinshipConfig kinship_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const MinerConfig& config);
MinerConfig miner_config_from_json(const nlohmann::json& doc);

}  // namespace dsmm::models
