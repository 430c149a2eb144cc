#include "dsmm/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::num {

namespace {

void require_matrix(const Tensor& t, std::string_view op) {
    require(t.rank() == 2, std::string(op) + " expects rank-2 operands, got " + shape_string(t.shape()));
}

// out(m x n) += a(m x k) * b(k x n)
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& out) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            if (aip == 0.0) {
                continue;
            }
            const double* brow = pb + p * n;
            double* orow = po + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += aip * brow[j];
            }
        }
    }
}

// out(m x k) += g(m x n) * b(k x n)^T
void gemm_nt(const Tensor& g, const Tensor& b, Tensor& out) {
    const std::size_t m = g.rows(), n = g.cols(), k = b.rows();
    const double* pg = g.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double* grow = pg + i * n;
            const double* brow = pb + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += grow[j] * brow[j];
            }
            po[i * k + p] += acc;
        }
    }
}

// out(k x n) += a(m x k)^T * g(m x n)
void gemm_tn(const Tensor& a, const Tensor& g, Tensor& out) {
    const std::size_t m = a.rows(), k = a.cols(), n = g.cols();
    const double* pa = a.data().data();
    const double* pg = g.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = pg + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            if (aip == 0.0) {
                continue;
            }
            double* orow = po + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += aip * grow[j];
            }
        }
    }
}

template <typename F>
Tensor map(const Tensor& a, F f) {
    Tensor out(a.shape());
    auto src = a.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = f(src[i]);
    }
    return out;
}

}  // namespace

Var Graph::push(Op op, Tensor value, std::uint32_t lhs, std::uint32_t rhs, double attr, bool is_tracked,
                std::string_view name) {
    if (!value.all_finite()) {
        throw NumericError("numeric overflow: non-finite value produced by " + std::string(name));
    }
    Node node;
    node.op = op;
    node.lhs = lhs;
    node.rhs = rhs;
    node.attr = attr;
    node.tracked = is_tracked;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant(Tensor value) {
    require_matrix(value, "constant");
    return push(Op::leaf, std::move(value), 0, 0, 0.0, false, "constant");
}

Var Graph::parameter(Tensor value) {
    require_matrix(value, "parameter");
    return push(Op::leaf, std::move(value), 0, 0, 0.0, true, "parameter");
}

Var Graph::matmul(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    require(va.cols() == vb.rows(),
            "matmul shape mismatch: " + shape_string(va.shape()) + " * " + shape_string(vb.shape()));
    Tensor out = Tensor::matrix(va.rows(), vb.cols());
    gemm_nn(va, vb, out);
    return push(Op::matmul, std::move(out), a.id, b.id, 0.0, tracked(a) || tracked(b), "matmul");
}

Var Graph::add(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (va.same_shape(vb)) {
        Tensor out = va;
        auto dst = out.data();
        auto src = vb.data();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += src[i];
        }
        return push(Op::add, std::move(out), a.id, b.id, 0.0, tracked(a) || tracked(b), "add");
    }
    require(vb.rows() == 1 && vb.cols() == va.cols(),
            "add shape mismatch: " + shape_string(va.shape()) + " + " + shape_string(vb.shape()));
    Tensor out = va;
    const std::size_t n = va.cols();
    for (std::size_t r = 0; r < va.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            out.at(r, c) += vb[c];
        }
    }
    return push(Op::add_row, std::move(out), a.id, b.id, 0.0, tracked(a) || tracked(b), "add");
}

Var Graph::mul(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    require(va.same_shape(vb),
            "mul shape mismatch: " + shape_string(va.shape()) + " * " + shape_string(vb.shape()));
    Tensor out = va;
    auto dst = out.data();
    auto src = vb.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] *= src[i];
    }
    return push(Op::mul, std::move(out), a.id, b.id, 0.0, tracked(a) || tracked(b), "mul");
}

Var Graph::sigmoid(Var a) {
    Tensor out = map(value(a), [](double x) {
        if (x >= 0.0) {
            return 1.0 / (1.0 + std::exp(-x));
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
    });
    return push(Op::sigmoid, std::move(out), a.id, 0, 0.0, tracked(a), "sigmoid");
}

Var Graph::relu(Var a) {
    Tensor out = map(value(a), [](double x) { return x > 0.0 ? x : 0.0; });
    return push(Op::relu, std::move(out), a.id, 0, 0.0, tracked(a), "relu");
}

Var Graph::tanh(Var a) {
    Tensor out = map(value(a), [](double x) { return std::tanh(x); });
    return push(Op::tanh, std::move(out), a.id, 0, 0.0, tracked(a), "tanh");
}

Var Graph::log(Var a) {
    Tensor out = map(value(a), [](double x) { return std::log(std::max(x, kLogFloor)); });
    return push(Op::log, std::move(out), a.id, 0, 0.0, tracked(a), "log");
}

Var Graph::pow(Var a, double exponent) {
    const Tensor& va = value(a);
    for (double x : va.data()) {
        require(x >= 0.0, "pow expects nonnegative base");
    }
    Tensor out = map(va, [exponent](double x) { return exponent == 0.0 ? 1.0 : std::pow(x, exponent); });
    return push(Op::pow, std::move(out), a.id, 0, exponent, tracked(a), "pow");
}

Var Graph::concat_cols(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    require(va.rows() == vb.rows(),
            "concat_cols row mismatch: " + shape_string(va.shape()) + " | " + shape_string(vb.shape()));
    const std::size_t na = va.cols(), nb = vb.cols();
    Tensor out = Tensor::matrix(va.rows(), na + nb);
    for (std::size_t r = 0; r < va.rows(); ++r) {
        for (std::size_t c = 0; c < na; ++c) {
            out.at(r, c) = va.at(r, c);
        }
        for (std::size_t c = 0; c < nb; ++c) {
            out.at(r, na + c) = vb.at(r, c);
        }
    }
    return push(Op::concat_cols, std::move(out), a.id, b.id, 0.0, tracked(a) || tracked(b), "concat_cols");
}

Var Graph::reshape(Var a, std::size_t rows, std::size_t cols) {
    const Tensor& va = value(a);
    require(rows * cols == va.size(),
            "reshape of " + shape_string(va.shape()) + " to " + shape_string({rows, cols}));
    Tensor out({rows, cols}, std::vector<double>(va.data().begin(), va.data().end()));
    return push(Op::reshape, std::move(out), a.id, 0, 0.0, tracked(a), "reshape");
}

Var Graph::sum(Var a) {
    double total = 0.0;
    for (double x : value(a).data()) {
        total += x;
    }
    return push(Op::sum, Tensor::scalar(total), a.id, 0, 0.0, tracked(a), "sum");
}

Var Graph::mean(Var a) {
    const Tensor& va = value(a);
    require(va.size() > 0, "mean of empty tensor");
    double total = 0.0;
    for (double x : va.data()) {
        total += x;
    }
    return push(Op::mean, Tensor::scalar(total / static_cast<double>(va.size())), a.id, 0, 0.0, tracked(a),
                "mean");
}

Var Graph::scale(Var a, double factor) {
    Tensor out = map(value(a), [factor](double x) { return x * factor; });
    return push(Op::scale, std::move(out), a.id, 0, factor, tracked(a), "scale");
}

Var Graph::add_scalar(Var a, double offset) {
    Tensor out = map(value(a), [offset](double x) { return x + offset; });
    return push(Op::add_scalar, std::move(out), a.id, 0, offset, tracked(a), "add_scalar");
}

void Graph::backward(Var root) {
    require(value(root).size() == 1, "backward needs a scalar root, got " + shape_string(value(root).shape()));
    grads_.assign(nodes_.size(), Tensor());
    for (std::size_t i = 0; i <= root.id; ++i) {
        if (nodes_[i].tracked) {
            grads_[i] = Tensor(nodes_[i].value.shape(), 0.0);
        }
    }
    if (!nodes_[root.id].tracked) {
        return;
    }
    grads_[root.id][0] = 1.0;

    for (std::size_t idx = root.id + 1; idx-- > 0;) {
        const Node& node = nodes_[idx];
        if (!node.tracked || node.op == Op::leaf) {
            continue;
        }
        const Tensor& g = grads_[idx];
        const Tensor& y = node.value;
        const bool left = nodes_[node.lhs].tracked;
        const bool right = nodes_[node.rhs].tracked;
        switch (node.op) {
            case Op::leaf:
                break;
            case Op::matmul:
                if (left) {
                    gemm_nt(g, nodes_[node.rhs].value, grads_[node.lhs]);
                }
                if (right) {
                    gemm_tn(nodes_[node.lhs].value, g, grads_[node.rhs]);
                }
                break;
            case Op::add:
                for (std::uint32_t in : {node.lhs, node.rhs}) {
                    if (nodes_[in].tracked) {
                        auto dst = grads_[in].data();
                        for (std::size_t k = 0; k < dst.size(); ++k) {
                            dst[k] += g[k];
                        }
                    }
                }
                break;
            case Op::add_row: {
                if (left) {
                    auto dst = grads_[node.lhs].data();
                    for (std::size_t k = 0; k < dst.size(); ++k) {
                        dst[k] += g[k];
                    }
                }
                if (right) {
                    Tensor& gb = grads_[node.rhs];
                    const std::size_t n = g.cols();
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                        for (std::size_t c = 0; c < n; ++c) {
                            gb[c] += g.at(r, c);
                        }
                    }
                }
                break;
            }
            case Op::mul: {
                const Tensor& a = nodes_[node.lhs].value;
                const Tensor& b = nodes_[node.rhs].value;
                if (left) {
                    auto dst = grads_[node.lhs].data();
                    for (std::size_t k = 0; k < dst.size(); ++k) {
                        dst[k] += g[k] * b[k];
                    }
                }
                if (right) {
                    auto dst = grads_[node.rhs].data();
                    for (std::size_t k = 0; k < dst.size(); ++k) {
                        dst[k] += g[k] * a[k];
                    }
                }
                break;
            }
            case Op::sigmoid: {
                auto dst = grads_[node.lhs].data();
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    dst[k] += g[k] * y[k] * (1.0 - y[k]);
                }
                break;
            }
            case Op::relu: {
                const Tensor& x = nodes_[node.lhs].value;
                auto dst = grads_[node.lhs].data();
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    if (x[k] > 0.0) {
                        dst[k] += g[k];
                    }
                }
                break;
            }
            case Op::tanh: {
                auto dst = grads_[node.lhs].data();
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    dst[k] += g[k] * (1.0 - y[k] * y[k]);
                }
                break;
            }
            case Op::log: {
                const Tensor& x = nodes_[node.lhs].value;
                auto dst = grads_[node.lhs].data();
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    if (x[k] > kLogFloor) {
                        dst[k] += g[k] / x[k];
                    }
                }
                break;
            }
            case Op::pow: {
                const double e = node.attr;
                if (e == 0.0) {
                    break;
                }
                const Tensor& x = nodes_[node.lhs].value;
                auto dst = grads_[node.lhs].data();
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    dst[k] += g[k] * e * std::pow(x[k], e - 1.0);
                }
                break;
            }
            case Op::concat_cols: {
                const std::size_t na = nodes_[node.lhs].value.cols();
                const std::size_t nb = nodes_[node.rhs].value.cols();
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    if (left) {
                        for (std::size_t c = 0; c < na; ++c) {
                            grads_[node.lhs].at(r, c) += g.at(r, c);
                        }
                    }
                    if (right) {
                        for (std::size_t c = 0; c < nb; ++c) {
                            grads_[node.rhs].at(r, c) += g.at(r, na + c);
                        }
                    }
                }
                break;
            }
            case Op::reshape: {
                auto dst = grads_[node.lhs].data();
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    dst[k] += g[k];
                }
                break;
            }
            case Op::sum:
            case Op::mean: {
                auto dst = grads_[node.lhs].data();
                const double share =
                    node.op == Op::sum ? g[0] : g[0] / static_cast<double>(dst.size());
                for (double& d : dst) {
                    d += share;
                }
                break;
            }
            case Op::scale: {
                auto dst = grads_[node.lhs].data();
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    dst[k] += g[k] * node.attr;
                }
                break;
            }
            case Op::add_scalar: {
                auto dst = grads_[node.lhs].data();
                for (std::size_t k = 0; k < dst.size(); ++k) {
                    dst[k] += g[k];
                }
                break;
            }
        }
    }
}

const Tensor& Graph::grad(Var v) const {
    require(v.id < grads_.size(), "grad() before backward() or for a node added afterwards");
    return grads_[v.id];
}

namespace {

std::pair<Graph, ParamVars> bind(const ParamSet& params, Var& root, const LossFn& loss_fn) {
    Graph graph;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        vars.push_back(graph.parameter(params[i]));
    }
    ParamVars bound(params, std::move(vars));
    root = loss_fn(graph, bound);
    return {std::move(graph), std::move(bound)};
}

}  // namespace

double evaluate(const LossFn& loss_fn, const ParamSet& params) {
    Var root;
    auto [graph, bound] = bind(params, root, loss_fn);
    return graph.value(root).item();
}

std::pair<double, GradSet> value_and_grad(const LossFn& loss_fn, const ParamSet& params) {
    Var root;
    auto [graph, bound] = bind(params, root, loss_fn);
    const double loss = graph.value(root).item();
    graph.backward(root);
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        grads.push_back(graph.grad(bound[i]));
    }
    GradSet out(std::move(grads));
    if (!out.all_finite()) {
        throw NumericError("numeric overflow: non-finite gradient in backward pass");
    }
    return {loss, std::move(out)};
}

GradSet finite_diff_grad(const LossFn& loss_fn, const ParamSet& params, double step) {
    require(step > 0.0, "finite difference step must be positive");
    GradSet out = GradSet::zeros_like(params);
    ParamSet probe = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t k = 0; k < params[i].size(); ++k) {
            const double original = params[i][k];
            probe[i][k] = original + step;
            const double up = evaluate(loss_fn, probe);
            probe[i][k] = original - step;
            const double down = evaluate(loss_fn, probe);
            probe[i][k] = original;
            out[i][k] = (up - down) / (2.0 * step);
        }
    }
    return out;
}

double max_relative_error(const GradSet& a, const GradSet& b, double floor) {
    require(a.size() == b.size(), "gradient sets differ in length");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        require(a[i].same_shape(b[i]), "gradient shape mismatch at entry " + std::to_string(i));
        for (std::size_t k = 0; k < a[i].size(); ++k) {
            const double denom = std::max({std::abs(a[i][k]), std::abs(b[i][k]), floor});
            worst = std::max(worst, std::abs(a[i][k] - b[i][k]) / denom);
        }
    }
    return worst;
}

}  // namespace dsmm::num
