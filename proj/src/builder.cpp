#include "fairtree/builder.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fairtree/error.hpp"

namespace fairtree {

using json = nlohmann::json;

namespace {

NodeFeatureData project_feature(const Dataset& data, std::span<const long> rows, int feature) {
    NodeFeatureData d;
    d.x.reserve(rows.size());
    d.a.reserve(rows.size());
    d.y.reserve(rows.size());
    for (long r : rows) {
        d.x.push_back(data.at(r, feature));
        d.a.push_back(data.a[r]);
        d.y.push_back(data.y[r]);
    }
    return d;
}

int majority_label(const Dataset& data, std::span<const long> rows) {
    long pos = 0;
    for (long r : rows)
        if (data.y[r] == 1) ++pos;
    long neg = static_cast<long>(rows.size()) - pos;
    return pos > neg ? 1 : -1;  // ties take the non-advantageous class
}

bool pure(const Dataset& data, std::span<const long> rows) {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (data.y[rows[i]] != data.y[rows[0]]) return false;
    return true;
}

}  // namespace

std::optional<SplitChoice> clrt_split(const Dataset& data, std::span<const long> rows, double c,
                                      const SolverOptions& opts, int min_child,
                                      bool reject_unconverged) {
    if (rows.empty()) throw contract_error("clrt_split: empty node data");
    if (min_child < 1) throw contract_error("clrt_split: min_child must be >= 1");

    std::optional<SplitChoice> best;
    for (int j = 0; j < data.p; ++j) {
        NodeFeatureData dj = project_feature(data, rows, j);
        ClrFit fit = fit_constrained(dj, c, opts);
        if (reject_unconverged && !fit.converged) continue;

        long errors = 0;
        long fires = 0;
        for (std::size_t i = 0; i < dj.size(); ++i) {
            bool t = fit.theta.intercept + fit.theta.slope * dj.x[i] > 0.0;
            if (t) ++fires;
            int pred = t ? 1 : -1;
            if (pred != dj.y[i]) ++errors;
        }
        long other = static_cast<long>(rows.size()) - fires;
        if (fires < min_child || other < min_child) continue;  // trivial or undersized partition
        if (fit.theta.intercept == 0.0 && fit.theta.slope == 0.0) continue;

        if (!best || errors < best->error_count) {
            best = SplitChoice{j, fit.theta, errors, fit.converged, fit.degenerate_feature};
        }
    }
    return best;
}

namespace {

NodeId grow_node(DecisionTree& tree, const Dataset& data, std::vector<long>& rows, int depth,
                 const GrowthConfig& cfg, const SolverOptions& opts, GrowthStats* stats) {
    bool stop = depth >= cfg.max_depth || static_cast<long>(rows.size()) < cfg.min_samples_split ||
                pure(data, rows);
    std::optional<SplitChoice> choice;
    if (!stop)
        choice = clrt_split(data, rows, cfg.c, opts, std::max(1, cfg.min_samples_leaf),
                            cfg.reject_unconverged);
    if (stop || !choice) return tree.add_leaf(majority_label(data, rows));

    if (stats) {
        ++stats->nodes;
        if (!choice->converged) ++stats->unconverged_chosen;
    }

    NodeId id = tree.reserve_decision();
    SplitTest test(choice->feature, choice->theta.intercept, choice->theta.slope);

    std::vector<long> left_rows, right_rows;
    for (long r : rows) {
        if (test.fires(data.at(r, test.feature)))
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    NodeId left = grow_node(tree, data, left_rows, depth + 1, cfg, opts, stats);
    NodeId right = grow_node(tree, data, right_rows, depth + 1, cfg, opts, stats);
    tree.fill_decision(id, test, left, right);
    return id;
}

}  // namespace

DecisionTree grow(const Dataset& data, const GrowthConfig& cfg, const SolverOptions& opts,
                  GrowthStats* stats) {
    if (data.n == 0) throw contract_error("grow: empty dataset");
    if (cfg.max_depth < 0) throw contract_error("grow: max_depth must be >= 0");
    if (cfg.min_samples_split < 2) throw contract_error("grow: min_samples_split must be >= 2");
    if (cfg.min_samples_leaf < 1) throw contract_error("grow: min_samples_leaf must be >= 1");
    if (!(cfg.c > 0.0)) throw contract_error("grow: c must be positive (or +inf for LRT)");

    std::vector<long> rows(data.n);
    for (long i = 0; i < data.n; ++i) rows[i] = i;
    DecisionTree tree;
    tree.set_root(grow_node(tree, data, rows, 0, cfg, opts, stats));
    tree.validate();
    return tree;
}

bool is_constant_tree(const DecisionTree& tree) {
    return tree.node_count() == 1 && tree.is_leaf(tree.root());
}

std::string growth_to_json(const GrowthConfig& cfg) {
    json j;
    if (std::isinf(cfg.c))
        j["c"] = "inf";
    else
        j["c"] = cfg.c;
    j["max_depth"] = cfg.max_depth;
    j["min_samples_split"] = cfg.min_samples_split;
    j["min_samples_leaf"] = cfg.min_samples_leaf;
    j["reject_unconverged"] = cfg.reject_unconverged;
    return j.dump();
}

GrowthConfig growth_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("growth JSON: ") + e.what());
    }
    GrowthConfig cfg;
    try {
        if (j.contains("c")) {
            if (j["c"].is_string()) {
                std::string s = j["c"].get<std::string>();
                if (s != "inf") throw parse_error("growth JSON: c must be a number or \"inf\"");
                cfg.c = std::numeric_limits<double>::infinity();
            } else {
                cfg.c = j["c"].get<double>();
            }
        }
        if (j.contains("max_depth")) cfg.max_depth = j["max_depth"].get<int>();
        if (j.contains("min_samples_split")) cfg.min_samples_split = j["min_samples_split"].get<int>();
        if (j.contains("min_samples_leaf")) cfg.min_samples_leaf = j["min_samples_leaf"].get<int>();
        if (j.contains("reject_unconverged")) cfg.reject_unconverged = j["reject_unconverged"].get<bool>();
    } catch (const json::exception& e) {
        throw parse_error(std::string("growth JSON: ") + e.what());
    }
    return cfg;
}

}  // namespace fairtree
