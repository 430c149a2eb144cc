#include "dsmm/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::metrics {

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
    require(!scores.empty(), "accuracy of an empty sample");
    require(scores.size() == labels.size(), "accuracy: scores and labels differ in length");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int predicted = scores[i] >= threshold ? 1 : 0;
        correct += predicted == labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    require(scores.size() == labels.size(), "roc: scores and labels differ in length");
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t negatives = labels.size() - positives;
    require(positives > 0 && negatives > 0, "roc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    // Trapezoid area kept in integer units of 1 / (2 P N) so the result is exact.
    std::uint64_t tp = 0, fp = 0, twice_area = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        const std::uint64_t tp_before = tp, fp_before = fp;
        while (i < order.size() && scores[order[i]] == threshold) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        twice_area += (fp - fp_before) * (tp_before + tp);
        curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(negatives),
                                static_cast<double>(tp) / static_cast<double>(positives)});
    }
    curve.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
    return curve;
}

double positive_weight_ratio(std::span<const int> labels, std::span<const double> weights) {
    require(labels.size() == weights.size(), "positive weight ratio: labels and weights differ in length");
    double positive = 0.0, total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        total += weights[i];
        if (labels[i] == 1) {
            positive += weights[i];
        }
    }
    require(total > 0.0, "positive weight ratio: total weight is zero");
    return positive / total;
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels, double threshold,
                    std::span<const std::string> tags) {
    require(tags.empty() || tags.size() == scores.size(), "evaluate: one tag per sample");
    EvalReport report;
    report.threshold = threshold;
    report.accuracy = accuracy(scores, labels, threshold);
    report.roc = roc_auc(scores, labels);

    std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> groups;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        groups[tags[i]].first.push_back(scores[i]);
        groups[tags[i]].second.push_back(labels[i]);
    }
    for (const auto& [tag, group] : groups) {
        GroupReport g;
        g.count = group.first.size();
        g.accuracy = accuracy(group.first, group.second, threshold);
        const auto pos = std::count(group.second.begin(), group.second.end(), 1);
        if (pos > 0 && static_cast<std::size_t>(pos) < group.second.size()) {
            g.auc = roc_auc(group.first, group.second).auc;
        }
        report.by_relation.emplace(tag, g);
    }
    return report;
}

}  // namespace dsmm::metrics
