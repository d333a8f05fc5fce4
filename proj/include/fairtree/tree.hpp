#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fairtree {

using NodeId = std::int32_t;

// Univariate linear test I(0 < theta0 + theta1 * x[feature]).
// True routes to the left child; theta^T x == 0 routes right (the right
// child owns the non-strict side of the inequality).
struct SplitTest {
    int feature;
    double theta0;
    double theta1;

    SplitTest(int feature, double theta0, double theta1);

    bool fires(double xj) const { return theta0 + theta1 * xj > 0.0; }
    // Threshold form x < r is recovered as theta1 < 0, r = -theta0/theta1.
};

// Test value extended off the node's domain with a sentinel.
enum class ExtendedTestValue : std::uint8_t { zero = 0, one = 1, alpha = 2 };

struct DecisionNode {
    SplitTest test;
    NodeId left;
    NodeId right;
};

struct LeafNode {
    int label;  // -1 or +1
};

// Binary decision tree over an arena of nodes with stable integer ids.
// Immutable once built; every accessor is const and thread-safe.
class DecisionTree {
public:
    using Node = std::variant<DecisionNode, LeafNode>;

    static DecisionTree single_leaf(int label);

    // Arena construction used by the builder and the deserializer. Parents
    // may be reserved before their children exist so ids read in preorder.
    NodeId add_leaf(int label);
    NodeId reserve_decision();
    void fill_decision(NodeId id, const SplitTest& test, NodeId left, NodeId right);
    void set_root(NodeId id);
    // Checks the rooted-binary-tree invariants (single parent, no cycles,
    // all paths end in a leaf, labels in {-1,+1}); throws structure_error.
    void validate() const;

    NodeId root() const { return root_; }
    std::size_t node_count() const { return nodes_.size(); }
    bool contains(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size(); }
    const Node& node(NodeId id) const;
    bool is_leaf(NodeId id) const;
    bool is_decision(NodeId id) const;

    std::vector<NodeId> terminal_nodes() const;
    std::vector<NodeId> decision_nodes() const;
    int depth() const;

    // Smallest arity an input vector must have to be evaluable.
    int required_features() const;

    int evaluate(std::span<const double> x) const;
    NodeId leaf_for(std::span<const double> x) const;

    // 1 iff x's root-to-leaf evaluation path passes through `node`.
    int node_domain_indicator(NodeId node, std::span<const double> x) const;

    // The subtree rooted at `node` as a standalone tree (ids remapped,
    // preorder from 0).
    DecisionTree branch(NodeId node) const;

    // I*: alpha off dom(T_node), otherwise the node's test value.
    ExtendedTestValue extended_test(NodeId node, std::span<const double> x) const;

    std::string to_json() const;
    static DecisionTree from_json(const std::string& text);

    bool operator==(const DecisionTree& other) const;

private:
    void check_input(std::span<const double> x) const;
    const DecisionNode& decision(NodeId id) const;

    std::vector<Node> nodes_;
    NodeId root_ = -1;
};

}  // namespace fairtree
