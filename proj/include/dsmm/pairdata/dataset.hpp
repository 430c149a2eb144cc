#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dsmm/numerics/tensor.hpp"

namespace dsmm::pairs {

enum class Role { parent, child };
enum class GeneratorMode { linear, nonlinear };

std::string_view to_string(Role role);
std::string_view to_string(GeneratorMode mode);
Role parse_role(std::string_view text);
GeneratorMode parse_mode(std::string_view text);

struct GeneratorConfig {
    std::size_t families = 200;  // N
    std::size_t dim = 16;        // d
    double rho = 0.8;
    double sigma = 0.25;
    GeneratorMode mode = GeneratorMode::linear;

    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

// Throws ContractError listing the first invalid field.
void validate(const GeneratorConfig& config);

struct GeneratorMeta {
    GeneratorConfig config;
    std::uint64_t seed = 0;

    friend bool operator==(const GeneratorMeta&, const GeneratorMeta&) = default;
};

struct Entity {
    std::int64_t family_id = 0;
    Role role = Role::parent;
    std::vector<double> features;
};

/// N families, one parent and one child each.
///
/// Family i contributes the positive pair (parent i, child i); every ordered
/// (parent i, child j), i != j, is a negative. Negatives are implicit: they are
/// addressed by index and never stored.
class PairDataset {
public:
    // parents and children are N x d, row i belonging to family_ids[i].
    PairDataset(std::vector<std::int64_t> family_ids, num::Tensor parents, num::Tensor children,
                std::optional<GeneratorMeta> generator = std::nullopt);

    // Requires exactly one parent and one child per family id. Families are
    // ordered by first appearance.
    static PairDataset from_entities(const std::vector<Entity>& entities,
                                     std::optional<GeneratorMeta> generator = std::nullopt);
    std::vector<Entity> entities() const;

    std::size_t families() const { return family_ids_.size(); }
    std::size_t dim() const { return parents_.cols(); }
    std::int64_t family_id(std::size_t index) const { return family_ids_[index]; }
    std::span<const double> parent(std::size_t index) const;
    std::span<const double> child(std::size_t index) const;
    const num::Tensor& parents() const { return parents_; }
    const num::Tensor& children() const { return children_; }
    const std::optional<GeneratorMeta>& generator() const { return generator_; }

    std::uint64_t negative_pair_count() const;

    friend bool operator==(const PairDataset&, const PairDataset&) = default;

private:
    std::vector<std::int64_t> family_ids_;
    num::Tensor parents_;
    num::Tensor children_;
    std::optional<GeneratorMeta> generator_;
};

// N (N - 1): ordered mismatched (parent, child) pairs among N families.
std::uint64_t negative_count(std::uint64_t families);

}  // namespace dsmm::pairs
