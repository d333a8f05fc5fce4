#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairtree/dataset.hpp"
#include "fairtree/solver.hpp"
#include "fairtree/tree.hpp"

namespace fairtree {

struct GrowthConfig {
    // +infinity selects the unconstrained (LRT) baseline.
    double c = std::numeric_limits<double>::infinity();
    int max_depth = 5;
    int min_samples_split = 20;
    int min_samples_leaf = 10;
    bool reject_unconverged = false;
};

struct SplitChoice {
    int feature = -1;
    Theta theta;
    long error_count = 0;
    bool converged = false;
    bool degenerate_feature = false;
};

// One constrained-logistic fit per feature on the node's rows; the feature
// with the fewest sign-classifier errors wins (smallest index on ties).
// Candidates whose test routes fewer than min_child rows to either side are
// invalid; returns nullopt when no candidate is valid (or, with
// reject_unconverged, when no valid candidate's fit converged).
std::optional<SplitChoice> clrt_split(const Dataset& data, std::span<const long> rows, double c,
                                      const SolverOptions& opts, int min_child = 1,
                                      bool reject_unconverged = false);

struct GrowthStats {
    long nodes = 0;               // decision nodes placed
    long unconverged_chosen = 0;  // decision nodes whose winning fit had converged=false
};

// CART-style recursion with clrt_split choosing the tests. Leaves take the
// node majority label (ties -> -1).
DecisionTree grow(const Dataset& data, const GrowthConfig& config, const SolverOptions& opts = {},
                  GrowthStats* stats = nullptr);

// True iff the tree is a single leaf (the degenerate "constant tree").
bool is_constant_tree(const DecisionTree& tree);

std::string growth_to_json(const GrowthConfig& config);
GrowthConfig growth_from_json(const std::string& text);

}  // namespace fairtree
