#include "dsmm/numerics/params.hpp"

#include <algorithm>
#include <cmath>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::num {

std::size_t ParamSet::add(std::string name, Tensor value) {
    for (const auto& entry : entries_) {
        require(entry.first != name, "duplicate parameter name '" + name + "'");
    }
    entries_.emplace_back(std::move(name), std::move(value));
    return entries_.size() - 1;
}

std::size_t ParamSet::scalar_count() const {
    std::size_t total = 0;
    for (const auto& entry : entries_) {
        total += entry.second.size();
    }
    return total;
}

std::size_t ParamSet::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first == name) {
            return i;
        }
    }
    throw ContractError("no parameter named '" + std::string(name) + "'");
}

bool ParamSet::all_finite() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const auto& entry) { return entry.second.all_finite(); });
}

GradSet GradSet::zeros_like(const ParamSet& params) {
    std::vector<Tensor> tensors;
    tensors.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        tensors.emplace_back(params[i].shape(), 0.0);
    }
    return GradSet(std::move(tensors));
}

GradSet GradSet::zeros_like(const GradSet& other) {
    std::vector<Tensor> tensors;
    tensors.reserve(other.size());
    for (std::size_t i = 0; i < other.size(); ++i) {
        tensors.emplace_back(other[i].shape(), 0.0);
    }
    return GradSet(std::move(tensors));
}

void GradSet::axpy(double scale, const GradSet& other) {
    require(other.size() == size(), "gradient sets differ in length");
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        require(tensors_[i].same_shape(other[i]), "gradient shape mismatch at entry " + std::to_string(i));
        auto dst = tensors_[i].data();
        auto src = other[i].data();
        for (std::size_t k = 0; k < dst.size(); ++k) {
            dst[k] += scale * src[k];
        }
    }
}

double GradSet::dot(const GradSet& other) const {
    require(other.size() == size(), "gradient sets differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        require(tensors_[i].same_shape(other[i]), "gradient shape mismatch at entry " + std::to_string(i));
        auto a = tensors_[i].data();
        auto b = other[i].data();
        for (std::size_t k = 0; k < a.size(); ++k) {
            total += a[k] * b[k];
        }
    }
    return total;
}

double GradSet::max_abs() const {
    double best = 0.0;
    for (const auto& t : tensors_) {
        for (double v : t.data()) {
            best = std::max(best, std::abs(v));
        }
    }
    return best;
}

bool GradSet::all_finite() const {
    return std::all_of(tensors_.begin(), tensors_.end(), [](const Tensor& t) { return t.all_finite(); });
}

void check_congruent(const ParamSet& params, const GradSet& grads) {
    require(params.size() == grads.size(), "parameter/gradient count mismatch: " +
                                               std::to_string(params.size()) + " vs " +
                                               std::to_string(grads.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(params[i].same_shape(grads[i]), "shape mismatch for '" + params.name(i) + "': " +
                                                     shape_string(params[i].shape()) + " vs " +
                                                     shape_string(grads[i].shape()));
    }
}

}  // namespace dsmm::num
