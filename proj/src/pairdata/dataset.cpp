#include "dsmm/pairdata/dataset.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::pairs {

std::string_view to_string(Role role) { return role == Role::parent ? "parent" : "child"; }

std::string_view to_string(GeneratorMode mode) { return mode == GeneratorMode::linear ? "linear" : "nonlinear"; }

Role parse_role(std::string_view text) {
    if (text == "parent") return Role::parent;
    if (text == "child") return Role::child;
    throw ContractError("unknown role '" + std::string(text) + "'");
}

GeneratorMode parse_mode(std::string_view text) {
    if (text == "linear") return GeneratorMode::linear;
    if (text == "nonlinear") return GeneratorMode::nonlinear;
    throw ContractError("unknown generator mode '" + std::string(text) + "'");
}

void validate(const GeneratorConfig& config) {
    require(config.families >= 2, "generator: N must be >= 2");
    require(config.dim >= 1, "generator: d must be >= 1");
    require(config.rho > 0.0 && config.rho < 1.0, "generator: rho must lie in (0, 1)");
    require(config.sigma >= 0.0, "generator: sigma must be >= 0");
}

PairDataset::PairDataset(std::vector<std::int64_t> family_ids, num::Tensor parents, num::Tensor children,
                         std::optional<GeneratorMeta> generator)
    : family_ids_(std::move(family_ids)),
      parents_(std::move(parents)),
      children_(std::move(children)),
      generator_(std::move(generator)) {
    require(family_ids_.size() >= 2, "a pair dataset needs at least 2 families");
    require(parents_.rank() == 2 && children_.same_shape(parents_), "parent and child matrices must be N x d");
    require(parents_.rows() == family_ids_.size(), "one parent and one child row per family");
    require(parents_.all_finite() && children_.all_finite(), "dataset features must be finite");
    std::vector<std::int64_t> sorted = family_ids_;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "family ids must be unique");
}

PairDataset PairDataset::from_entities(const std::vector<Entity>& entities, std::optional<GeneratorMeta> generator) {
    require(!entities.empty(), "no entities");
    const std::size_t d = entities.front().features.size();
    std::vector<std::int64_t> order;
    std::map<std::int64_t, std::pair<const Entity*, const Entity*>> slots;
    for (const Entity& e : entities) {
        require(e.features.size() == d, "entity feature lengths differ");
        auto [it, inserted] = slots.try_emplace(e.family_id, nullptr, nullptr);
        if (inserted) {
            order.push_back(e.family_id);
        }
        auto& slot = e.role == Role::parent ? it->second.first : it->second.second;
        require(slot == nullptr, "family " + std::to_string(e.family_id) + " has more than one " +
                                     std::string(to_string(e.role)));
        slot = &e;
    }
    num::Tensor parents = num::Tensor::matrix(order.size(), d);
    num::Tensor children = num::Tensor::matrix(order.size(), d);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& [parent, child] = slots.at(order[i]);
        require(parent != nullptr && child != nullptr,
                "family " + std::to_string(order[i]) + " needs exactly one parent and one child");
        std::copy(parent->features.begin(), parent->features.end(), parents.data().begin() + i * d);
        std::copy(child->features.begin(), child->features.end(), children.data().begin() + i * d);
    }
    return PairDataset(std::move(order), std::move(parents), std::move(children), std::move(generator));
}

std::vector<Entity> PairDataset::entities() const {
    std::vector<Entity> out;
    out.reserve(2 * families());
    for (std::size_t i = 0; i < families(); ++i) {
        auto p = parent(i);
        auto c = child(i);
        out.push_back({family_ids_[i], Role::parent, {p.begin(), p.end()}});
        out.push_back({family_ids_[i], Role::child, {c.begin(), c.end()}});
    }
    return out;
}

std::span<const double> PairDataset::parent(std::size_t index) const {
    return parents_.data().subspan(index * dim(), dim());
}

std::span<const double> PairDataset::child(std::size_t index) const {
    return children_.data().subspan(index * dim(), dim());
}

std::uint64_t PairDataset::negative_pair_count() const { return negative_count(families()); }

std::uint64_t negative_count(std::uint64_t families) {
    return families == 0 ? 0 : families * (families - 1);
}

}  // namespace dsmm::pairs
