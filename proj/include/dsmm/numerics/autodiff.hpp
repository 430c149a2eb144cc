#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <utility>
#include <vector>

#include "dsmm/numerics/params.hpp"
#include "dsmm/numerics/tensor.hpp"

namespace dsmm::num {

// Handle to a node in a Graph. Only meaningful for the graph that made it.
struct Var {
    std::uint32_t id = 0;
};

// log() clamps its argument from below at this value.
inline constexpr double kLogFloor = 1e-12;

/// Tape for first-order reverse-mode differentiation of scalar losses.
///
/// Every operation evaluates eagerly and appends a node. backward() walks
/// the tape once in reverse. Any non-finite forward value throws
/// NumericError naming the primitive that produced it.
class Graph {
public:
    Var constant(Tensor value);
    Var parameter(Tensor value);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }

    Var matmul(Var a, Var b);
    // Same shapes, or b is 1 x n and broadcast over the rows of a.
    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var sigmoid(Var a);
    Var relu(Var a);
    Var tanh(Var a);
    Var log(Var a);  // log(max(a, kLogFloor))
    Var pow(Var a, double exponent);  // a >= 0 elementwise
    Var concat_cols(Var a, Var b);
    Var reshape(Var a, std::size_t rows, std::size_t cols);
    Var sum(Var a);
    Var mean(Var a);
    Var scale(Var a, double factor);
    Var add_scalar(Var a, double offset);

    // Gradients of `root` (must be 1 x 1) with respect to every node that
    // depends on a parameter. Call once per graph.
    void backward(Var root);
    const Tensor& grad(Var v) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        leaf,
        matmul,
        add,
        add_row,
        mul,
        sigmoid,
        relu,
        tanh,
        log,
        pow,
        concat_cols,
        reshape,
        sum,
        mean,
        scale,
        add_scalar,
    };

    struct Node {
        Op op = Op::leaf;
        std::uint32_t lhs = 0;
        std::uint32_t rhs = 0;
        double attr = 0.0;
        bool tracked = false;
        Tensor value;
    };

    Var push(Op op, Tensor value, std::uint32_t lhs, std::uint32_t rhs, double attr, bool tracked,
             std::string_view name);
    bool tracked(Var v) const { return nodes_[v.id].tracked; }

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

/// Parameter handles in ParamSet order.
class ParamVars {
public:
    ParamVars(const ParamSet& params, std::vector<Var> vars) : params_(&params), vars_(std::move(vars)) {}

    Var operator[](std::size_t i) const { return vars_[i]; }
    Var operator[](std::string_view name) const { return vars_[params_->index_of(name)]; }
    std::size_t size() const { return vars_.size(); }

private:
    const ParamSet* params_;
    std::vector<Var> vars_;
};

// Builds a scalar loss on the given graph from the bound parameters.
using LossFn = std::function<Var(Graph&, const ParamVars&)>;

double evaluate(const LossFn& loss_fn, const ParamSet& params);

std::pair<double, GradSet> value_and_grad(const LossFn& loss_fn, const ParamSet& params);

// Central differences, one scalar at a time. Test oracle; O(scalar_count) evaluations.
GradSet finite_diff_grad(const LossFn& loss_fn, const ParamSet& params, double step);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(const GradSet& a, const GradSet& b, double floor);

}  // namespace dsmm::num
