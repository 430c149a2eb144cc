#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dsmm::metrics {

// Fraction of samples with (score >= threshold) == label. Throws on empty input.
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct RocPoint {
    double threshold = 0.0;  // predict positive when score >= threshold
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    // Starts at (0, 0) with threshold +inf, ends at (1, 1).
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// ROC by sweeping the distinct scores in descending order; tied scores move
/// together, so the trapezoid AUC equals the Mann-Whitney statistic with ties
/// counted half. Throws ContractError unless both classes are present.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

// Sum of weights on positives over the sum of all weights.
double positive_weight_ratio(std::span<const int> labels, std::span<const double> weights);

struct GroupReport {
    std::size_t count = 0;
    double accuracy = 0.0;
    std::optional<double> auc;  // absent when the group has one class only
};

struct EvalReport {
    double threshold = 0.5;
    double accuracy = 0.0;
    RocCurve roc;
    std::map<std::string, GroupReport> by_relation;
};

// `tags` is either empty or one relation tag per sample.
EvalReport evaluate(std::span<const double> scores, std::span<const int> labels, double threshold,
                    std::span<const std::string> tags = {});

}  // namespace dsmm::metrics
