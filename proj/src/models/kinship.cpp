#include "dsmm/models/kinship.hpp"

#include <algorithm>
#include <cmath>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::models {

namespace {

std::vector<std::size_t> widths(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    std::vector<std::size_t> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
}

const KinshipConfig& validated(const KinshipConfig& c) {
    require(c.input_dim >= 1, "kinship model: input_dim must be >= 1");
    require(c.embed_dim >= 1, "kinship model: embed_dim (D) must be >= 1");
    require(c.relation_out >= 1, "kinship model: relation_out (k) must be >= 1");
    return c;
}

num::Tensor label_column(std::span<const int> labels, bool positive) {
    num::Tensor t = num::Tensor::matrix(labels.size(), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
        t[i] = (labels[i] == 1) == positive ? 1.0 : 0.0;
    }
    return t;
}

}  // namespace

KinshipModel::KinshipModel(KinshipConfig config)
    : config_(validated(config)),
      encoder_("enc", widths(config_.input_dim, config_.encoder_hidden, config_.embed_dim), config_.encoder_hidden_act,
               config_.encoder_output_act, 0),
      relation_("rel", widths(2, config_.relation_hidden, config_.relation_out), Activation::relu, Activation::relu,
                encoder_.param_count()),
      aggregator_("agg", widths(config_.embed_dim * config_.relation_out, config_.aggregator_hidden, 1),
                  Activation::relu, Activation::sigmoid, encoder_.param_count() + relation_.param_count()) {}

num::ParamSet KinshipModel::init(num::Rng& rng) const {
    num::ParamSet theta;
    encoder_.append_init(theta, rng);
    relation_.append_init(theta, rng);
    aggregator_.append_init(theta, rng);
    return theta;
}

num::ParamSet KinshipModel::zeros() const {
    num::ParamSet theta;
    encoder_.append_zeros(theta);
    relation_.append_zeros(theta);
    aggregator_.append_zeros(theta);
    return theta;
}

void KinshipModel::check_params(const num::ParamSet& theta) const {
    const num::ParamSet expected = zeros();
    require(theta.size() == expected.size(), "kinship parameters: expected " + std::to_string(expected.size()) +
                                                 " tensors, got " + std::to_string(theta.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
        require(theta.name(i) == expected.name(i) && theta[i].same_shape(expected[i]),
                "kinship parameter " + std::to_string(i) + ": expected " + expected.name(i) + " " +
                    num::shape_string(expected[i].shape()) + ", got " + theta.name(i) + " " +
                    num::shape_string(theta[i].shape()));
    }
}

num::Var KinshipModel::encode(num::Graph& graph, const num::ParamVars& theta, num::Var x) const {
    require(graph.value(x).cols() == config_.input_dim,
            "encode: feature length " + std::to_string(graph.value(x).cols()) + " != input_dim " +
                std::to_string(config_.input_dim));
    return encoder_.forward(graph, theta, x);
}

num::Var KinshipModel::forward(num::Graph& graph, const num::ParamVars& theta, num::Var x, num::Var y) const {
    const std::size_t batch = graph.value(x).rows();
    require(graph.value(y).rows() == batch, "kinship forward: parent and child batches differ in size");
    const std::size_t d = config_.embed_dim;
    const num::Var ex = encode(graph, theta, x);
    const num::Var ey = encode(graph, theta, y);
    // One row per (sample, coordinate): [e_x[i], e_y[i]].
    const num::Var coords = graph.concat_cols(graph.reshape(ex, batch * d, 1), graph.reshape(ey, batch * d, 1));
    const num::Var relations = relation_.forward(graph, theta, coords);
    const num::Var joined = graph.reshape(relations, batch, d * config_.relation_out);
    return aggregator_.forward(graph, theta, joined);
}

std::vector<double> KinshipModel::encode(std::span<const double> x, const num::ParamSet& theta) const {
    num::Graph graph;
    std::vector<num::Var> vars;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        vars.push_back(graph.constant(theta[i]));
    }
    const num::ParamVars bound(theta, std::move(vars));
    const num::Var in = graph.constant(num::Tensor::row({x.begin(), x.end()}));
    const auto out = graph.value(encode(graph, bound, in)).data();
    return {out.begin(), out.end()};
}

double KinshipModel::predict(std::span<const double> parent, std::span<const double> child,
                             const num::ParamSet& theta) const {
    return predict(num::Tensor::row({parent.begin(), parent.end()}), num::Tensor::row({child.begin(), child.end()}),
                   theta)
        .front();
}

std::vector<double> KinshipModel::predict(const num::Tensor& parents, const num::Tensor& children,
                                          const num::ParamSet& theta) const {
    num::Graph graph;
    std::vector<num::Var> vars;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        vars.push_back(graph.constant(theta[i]));
    }
    const num::ParamVars bound(theta, std::move(vars));
    const num::Var p = forward(graph, bound, graph.constant(parents), graph.constant(children));
    const auto out = graph.value(p).data();
    return {out.begin(), out.end()};
}

double bce_per_sample(double p, int label) {
    require(label == 0 || label == 1, "labels must be 0 or 1");
    const double q = label == 1 ? p : 1.0 - p;
    return -std::log(std::max(q, num::kLogFloor));
}

double focal_per_sample(double p, int label, double focal_gamma) {
    require(label == 0 || label == 1, "labels must be 0 or 1");
    const double pt = label == 1 ? p : 1.0 - p;
    const double modulation = focal_gamma == 0.0 ? 1.0 : std::pow(1.0 - pt, focal_gamma);
    return -modulation * std::log(std::max(pt, num::kLogFloor));
}

namespace {

// p_t per row: p where label is 1, 1 - p where it is 0.
num::Var true_class_probability(num::Graph& graph, num::Var p, std::span<const int> labels) {
    require(graph.value(p).rows() == labels.size() && graph.value(p).cols() == 1,
            "per-sample loss: probabilities must be a column aligned with the labels");
    const num::Var pos = graph.constant(label_column(labels, true));
    const num::Var neg = graph.constant(label_column(labels, false));
    const num::Var one_minus_p = graph.add_scalar(graph.scale(p, -1.0), 1.0);
    return graph.add(graph.mul(pos, p), graph.mul(neg, one_minus_p));
}

}  // namespace

num::Var bce_per_sample(num::Graph& graph, num::Var p, std::span<const int> labels) {
    return graph.scale(graph.log(true_class_probability(graph, p, labels)), -1.0);
}

num::Var focal_per_sample(num::Graph& graph, num::Var p, std::span<const int> labels, double focal_gamma) {
    const num::Var pt = true_class_probability(graph, p, labels);
    const num::Var ce = graph.scale(graph.log(pt), -1.0);
    if (focal_gamma == 0.0) {
        return ce;
    }
    const num::Var modulation = graph.pow(graph.add_scalar(graph.scale(pt, -1.0), 1.0), focal_gamma);
    return graph.mul(modulation, ce);
}

}  // namespace dsmm::models
