#include "fairtree/metrics.hpp"

#include <algorithm>

#include <json.hpp>

#include "fairtree/error.hpp"

namespace fairtree {

using json = nlohmann::json;

namespace {

void check_lists(std::span<const int> predictions, std::span<const int> truths,
                 std::span<const int> groups) {
    if (predictions.empty()) throw contract_error("metrics: empty prediction list");
    if (predictions.size() != truths.size() || predictions.size() != groups.size())
        throw contract_error("metrics: list length mismatch");
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] != -1 && predictions[i] != 1) throw contract_error("metrics: prediction not in {-1,+1}");
        if (truths[i] != -1 && truths[i] != 1) throw contract_error("metrics: truth not in {-1,+1}");
        if (groups[i] != 0 && groups[i] != 1) throw contract_error("metrics: group not in {0,1}");
    }
}

void check_two_lists(std::span<const int> predictions, std::span<const int> groups) {
    if (predictions.empty()) throw contract_error("metrics: empty prediction list");
    if (predictions.size() != groups.size()) throw contract_error("metrics: list length mismatch");
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] != -1 && predictions[i] != 1) throw contract_error("metrics: prediction not in {-1,+1}");
        if (groups[i] != 0 && groups[i] != 1) throw contract_error("metrics: group not in {0,1}");
    }
}

struct GroupRates {
    bool both_present = false;
    long n0 = 0, n1 = 0;
    long pos0 = 0, pos1 = 0;
};

GroupRates group_rates(std::span<const int> predictions, std::span<const int> groups) {
    GroupRates r;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (groups[i] == 0) {
            ++r.n0;
            if (predictions[i] == 1) ++r.pos0;
        } else {
            ++r.n1;
            if (predictions[i] == 1) ++r.pos1;
        }
    }
    r.both_present = r.n0 > 0 && r.n1 > 0;
    return r;
}

// min(rate1/rate0, rate0/rate1) evaluated as a single division of exact
// integer cross products, so group swaps and prediction flips land on
// bit-identical values.
std::optional<double> min_ratio_rule(long k0, long n0, long k1, long n1, bool constant_hits_rule) {
    if (constant_hits_rule) return 1.0;
    if (k0 == 0 || k1 == 0) return 0.0;  // one-sided degenerate: maximal disparity
    double x = static_cast<double>(k1) * static_cast<double>(n0);
    double y = static_cast<double>(k0) * static_cast<double>(n1);
    return x < y ? x / y : y / x;
}

std::optional<double> rate(long num, long den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> half_sum(std::optional<double> tpr, std::optional<double> tnr) {
    if (!tpr || !tnr) return std::nullopt;
    return 0.5 * (*tpr + *tnr);
}

json opt_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

std::optional<double> opt_from(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

}  // namespace

StratifiedConfusion stratified_confusion(std::span<const int> predictions,
                                         std::span<const int> truths,
                                         std::span<const int> groups) {
    check_lists(predictions, truths, groups);
    StratifiedConfusion cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        bool prot = groups[i] == 0;
        if (truths[i] == 1) {
            if (predictions[i] == 1) {
                ++cm.tp;
                (prot ? cm.tp_prot : cm.tp_nonprot)++;
            } else {
                ++cm.fn;
                (prot ? cm.fn_prot : cm.fn_nonprot)++;
            }
        } else {
            if (predictions[i] == 1) {
                ++cm.fp;
                (prot ? cm.fp_prot : cm.fp_nonprot)++;
            } else {
                ++cm.tn;
                (prot ? cm.tn_prot : cm.tn_nonprot)++;
            }
        }
    }
    return cm;
}

BalancedAccuracies balanced_accuracies(const StratifiedConfusion& cm) {
    BalancedAccuracies out;
    out.ba = half_sum(rate(cm.tp, cm.tp + cm.fn), rate(cm.tn, cm.tn + cm.fp));
    out.bpa = half_sum(rate(cm.tp_prot, cm.tp_prot + cm.fn_prot),
                       rate(cm.tn_prot, cm.tn_prot + cm.fp_prot));
    out.bnpa = half_sum(rate(cm.tp_nonprot, cm.tp_nonprot + cm.fn_nonprot),
                        rate(cm.tn_nonprot, cm.tn_nonprot + cm.fp_nonprot));
    return out;
}

std::optional<double> statistical_parity_difference(std::span<const int> predictions,
                                                    std::span<const int> groups) {
    check_two_lists(predictions, groups);
    GroupRates r = group_rates(predictions, groups);
    if (!r.both_present) return std::nullopt;
    // pos1/n1 - pos0/n0 over a common denominator; the numerator is an exact
    // integer so relabelings negate the value bit-exactly.
    double num = static_cast<double>(r.pos1) * static_cast<double>(r.n0) -
                 static_cast<double>(r.pos0) * static_cast<double>(r.n1);
    return num / (static_cast<double>(r.n1) * static_cast<double>(r.n0));
}

std::optional<double> p_rule(std::span<const int> predictions, std::span<const int> groups) {
    check_two_lists(predictions, groups);
    GroupRates r = group_rates(predictions, groups);
    if (!r.both_present) return std::nullopt;
    bool constant_negative = std::all_of(predictions.begin(), predictions.end(),
                                         [](int p) { return p == -1; });
    return min_ratio_rule(r.pos0, r.n0, r.pos1, r.n1, constant_negative);
}

std::optional<double> n_rule(std::span<const int> predictions, std::span<const int> groups) {
    check_two_lists(predictions, groups);
    GroupRates r = group_rates(predictions, groups);
    if (!r.both_present) return std::nullopt;
    bool constant_positive = std::all_of(predictions.begin(), predictions.end(),
                                         [](int p) { return p == 1; });
    return min_ratio_rule(r.n0 - r.pos0, r.n0, r.n1 - r.pos1, r.n1, constant_positive);
}

MetricsReport compute_metrics(std::span<const int> predictions,
                              std::span<const int> truths,
                              std::span<const int> groups) {
    StratifiedConfusion cm = stratified_confusion(predictions, truths, groups);
    MetricsReport rep;
    rep.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    BalancedAccuracies bas = balanced_accuracies(cm);
    rep.ba = bas.ba;
    rep.bpa = bas.bpa;
    rep.bnpa = bas.bnpa;
    rep.sp = statistical_parity_difference(predictions, groups);
    rep.p_rule = p_rule(predictions, groups);
    rep.n_rule = n_rule(predictions, groups);
    rep.constant_positive = std::all_of(predictions.begin(), predictions.end(),
                                        [](int p) { return p == 1; });
    rep.constant_negative = std::all_of(predictions.begin(), predictions.end(),
                                        [](int p) { return p == -1; });
    return rep;
}

std::string metrics_to_json(const MetricsReport& r) {
    json j;
    j["accuracy"] = opt_json(r.accuracy);
    j["ba"] = opt_json(r.ba);
    j["bpa"] = opt_json(r.bpa);
    j["bnpa"] = opt_json(r.bnpa);
    j["sp"] = opt_json(r.sp);
    j["p_rule"] = opt_json(r.p_rule);
    j["n_rule"] = opt_json(r.n_rule);
    j["constant_positive"] = r.constant_positive;
    j["constant_negative"] = r.constant_negative;
    return j.dump();
}

MetricsReport metrics_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("metrics JSON: ") + e.what());
    }
    MetricsReport r;
    try {
        r.accuracy = opt_from(j, "accuracy");
        r.ba = opt_from(j, "ba");
        r.bpa = opt_from(j, "bpa");
        r.bnpa = opt_from(j, "bnpa");
        r.sp = opt_from(j, "sp");
        r.p_rule = opt_from(j, "p_rule");
        r.n_rule = opt_from(j, "n_rule");
        r.constant_positive = j.value("constant_positive", false);
        r.constant_negative = j.value("constant_negative", false);
    } catch (const json::exception& e) {
        throw parse_error(std::string("metrics JSON: ") + e.what());
    }
    return r;
}

}  // namespace fairtree
