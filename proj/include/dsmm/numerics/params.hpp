#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsmm/numerics/tensor.hpp"

namespace dsmm::num {

/// Named, ordered collection of parameter tensors.
///
/// Order is insertion order, so two sets built by the same sequence of
/// add() calls line up entry for entry.
class ParamSet {
public:
    ParamSet() = default;

    // Returns the index of the new entry. Duplicate names are rejected.
    std::size_t add(std::string name, Tensor value);

    std::size_t size() const { return entries_.size(); }
    std::size_t scalar_count() const;

    const std::string& name(std::size_t i) const { return entries_[i].first; }
    const Tensor& operator[](std::size_t i) const { return entries_[i].second; }
    Tensor& operator[](std::size_t i) { return entries_[i].second; }

    // Throws ContractError when absent.
    std::size_t index_of(std::string_view name) const;
    const Tensor& operator[](std::string_view name) const { return entries_[index_of(name)].second; }
    Tensor& operator[](std::string_view name) { return entries_[index_of(name)].second; }

    bool all_finite() const;

    friend bool operator==(const ParamSet&, const ParamSet&) = default;

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
};

/// One tensor per ParamSet entry, same shapes, same order.
class GradSet {
public:
    GradSet() = default;
    explicit GradSet(std::vector<Tensor> tensors) : tensors_(std::move(tensors)) {}

    static GradSet zeros_like(const ParamSet& params);
    static GradSet zeros_like(const GradSet& other);

    std::size_t size() const { return tensors_.size(); }
    const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
    Tensor& operator[](std::size_t i) { return tensors_[i]; }

    // this += scale * other
    void axpy(double scale, const GradSet& other);
    double dot(const GradSet& other) const;
    double max_abs() const;
    bool all_finite() const;

    friend bool operator==(const GradSet&, const GradSet&) = default;

private:
    std::vector<Tensor> tensors_;
};

// Throws ContractError if the two do not line up.
void check_congruent(const ParamSet& params, const GradSet& grads);

}  // namespace dsmm::num
