#pragma once

#include <optional>
#include <span>
#include <string>

namespace fairtree {

// Confusion counts over the whole evaluation set and restricted to the
// protected (a=0) and non-protected (a=1) groups. +1 is the positive class.
struct StratifiedConfusion {
    long tp = 0, fn = 0, fp = 0, tn = 0;
    long tp_prot = 0, fn_prot = 0, fp_prot = 0, tn_prot = 0;
    long tp_nonprot = 0, fn_nonprot = 0, fp_nonprot = 0, tn_nonprot = 0;

    long total() const { return tp + fn + fp + tn; }
};

struct BalancedAccuracies {
    std::optional<double> ba;    // overall
    std::optional<double> bpa;   // a = 0
    std::optional<double> bnpa;  // a = 1
};

struct MetricsReport {
    std::optional<double> accuracy;
    std::optional<double> ba;
    std::optional<double> bpa;
    std::optional<double> bnpa;
    std::optional<double> sp;
    std::optional<double> p_rule;
    std::optional<double> n_rule;
    bool constant_positive = false;  // predictions identically +1
    bool constant_negative = false;  // predictions identically -1
};

StratifiedConfusion stratified_confusion(std::span<const int> predictions,
                                         std::span<const int> truths,
                                         std::span<const int> groups);

// Half of (TPR + TNR); a metric whose rate has a zero denominator comes back
// unset rather than NaN.
BalancedAccuracies balanced_accuracies(const StratifiedConfusion& cm);

// P(pred = 1 | a = 1) - P(pred = 1 | a = 0); unset when a group is absent.
std::optional<double> statistical_parity_difference(std::span<const int> predictions,
                                                    std::span<const int> groups);

// min of the two conditional positive-rate ratios. Constant classifiers get
// the fixed conventions p_rule = 1 for pred == -1 everywhere and n_rule = 1
// for pred == +1 everywhere; a non-constant classifier with zero positives
// (negatives for n_rule) in exactly one group scores 0.
std::optional<double> p_rule(std::span<const int> predictions, std::span<const int> groups);
std::optional<double> n_rule(std::span<const int> predictions, std::span<const int> groups);

MetricsReport compute_metrics(std::span<const int> predictions,
                              std::span<const int> truths,
                              std::span<const int> groups);

// Flat JSON object with nullable fields named exactly: accuracy, ba, bpa,
// bnpa, sp, p_rule, n_rule, constant_positive, constant_negative.
std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& text);

}  // namespace fairtree
