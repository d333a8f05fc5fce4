#include "fairtree/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "fairtree/error.hpp"

namespace fairtree {

using json = nlohmann::json;

SplitTest::SplitTest(int feature_, double theta0_, double theta1_)
    : feature(feature_), theta0(theta0_), theta1(theta1_) {
    if (feature < 0) throw domain_error("SplitTest: negative feature index");
    if (!std::isfinite(theta0) || !std::isfinite(theta1))
        throw domain_error("SplitTest: non-finite theta");
    if (theta0 == 0.0 && theta1 == 0.0)
        throw domain_error("SplitTest: all-zero theta is a degenerate constant test");
}

DecisionTree DecisionTree::single_leaf(int label) {
    DecisionTree t;
    t.set_root(t.add_leaf(label));
    return t;
}

NodeId DecisionTree::add_leaf(int label) {
    if (label != -1 && label != 1) throw domain_error("Leaf label must be -1 or +1");
    nodes_.push_back(LeafNode{label});
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId DecisionTree::reserve_decision() {
    nodes_.push_back(DecisionNode{SplitTest(0, 1.0, 0.0), -1, -1});
    return static_cast<NodeId>(nodes_.size() - 1);
}

void DecisionTree::fill_decision(NodeId id, const SplitTest& test, NodeId left, NodeId right) {
    if (!contains(id) || !std::holds_alternative<DecisionNode>(nodes_[id]))
        throw structure_error("fill_decision: not a reserved decision node");
    if (!contains(left) || !contains(right))
        throw structure_error("fill_decision: child id out of range");
    nodes_[id] = DecisionNode{test, left, right};
}

void DecisionTree::set_root(NodeId id) {
    if (!contains(id)) throw structure_error("set_root: id out of range");
    root_ = id;
}

const DecisionTree::Node& DecisionTree::node(NodeId id) const {
    if (!contains(id)) throw structure_error("unknown node id " + std::to_string(id));
    return nodes_[id];
}

bool DecisionTree::is_leaf(NodeId id) const {
    return std::holds_alternative<LeafNode>(node(id));
}

bool DecisionTree::is_decision(NodeId id) const {
    return std::holds_alternative<DecisionNode>(node(id));
}

const DecisionNode& DecisionTree::decision(NodeId id) const {
    const Node& n = node(id);
    if (!std::holds_alternative<DecisionNode>(n))
        throw structure_error("node " + std::to_string(id) + " is not a decision node");
    return std::get<DecisionNode>(n);
}

void DecisionTree::validate() const {
    if (root_ < 0 || !contains(root_)) throw structure_error("tree has no root");
    std::vector<int> indegree(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (const auto* d = std::get_if<DecisionNode>(&nodes_[i])) {
            if (!contains(d->left) || !contains(d->right))
                throw structure_error("decision node " + std::to_string(i) + " has dangling child");
            if (d->left == d->right)
                throw structure_error("decision node children must be distinct");
            indegree[d->left]++;
            indegree[d->right]++;
        } else {
            int label = std::get<LeafNode>(nodes_[i]).label;
            if (label != -1 && label != 1)
                throw structure_error("leaf label must be -1 or +1");
        }
    }
    if (indegree[root_] != 0) throw structure_error("root must have no parent");
    std::size_t reachable = 0;
    std::vector<char> seen(nodes_.size(), 0);
    std::function<void(NodeId)> walk = [&](NodeId id) {
        if (seen[id]) throw structure_error("node reachable twice (cycle or shared child)");
        seen[id] = 1;
        ++reachable;
        if (const auto* d = std::get_if<DecisionNode>(&nodes_[id])) {
            walk(d->left);
            walk(d->right);
        }
    };
    walk(root_);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!seen[i]) throw structure_error("node " + std::to_string(i) + " unreachable from root");
        if (static_cast<NodeId>(i) != root_ && indegree[i] != 1)
            throw structure_error("non-root node must have exactly one parent");
    }
    (void)reachable;
}

std::vector<NodeId> DecisionTree::terminal_nodes() const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (std::holds_alternative<LeafNode>(nodes_[i])) out.push_back(static_cast<NodeId>(i));
    return out;
}

std::vector<NodeId> DecisionTree::decision_nodes() const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (std::holds_alternative<DecisionNode>(nodes_[i])) out.push_back(static_cast<NodeId>(i));
    return out;
}

int DecisionTree::depth() const {
    std::function<int(NodeId)> d = [&](NodeId id) -> int {
        if (const auto* dec = std::get_if<DecisionNode>(&nodes_[id]))
            return 1 + std::max(d(dec->left), d(dec->right));
        return 0;
    };
    return d(root_);
}

int DecisionTree::required_features() const {
    int arity = 0;
    for (const auto& n : nodes_)
        if (const auto* d = std::get_if<DecisionNode>(&n))
            arity = std::max(arity, d->test.feature + 1);
    return arity;
}

void DecisionTree::check_input(std::span<const double> x) const {
    if (static_cast<int>(x.size()) < required_features())
        throw domain_error("input has " + std::to_string(x.size()) + " coordinates, tree tests feature " +
                           std::to_string(required_features() - 1));
    for (double v : x)
        if (!std::isfinite(v)) throw domain_error("non-finite input coordinate");
}

int DecisionTree::evaluate(std::span<const double> x) const {
    return std::get<LeafNode>(nodes_[leaf_for(x)]).label;
}

NodeId DecisionTree::leaf_for(std::span<const double> x) const {
    check_input(x);
    NodeId cur = root_;
    while (const auto* d = std::get_if<DecisionNode>(&nodes_[cur]))
        cur = d->test.fires(x[d->test.feature]) ? d->left : d->right;
    return cur;
}

int DecisionTree::node_domain_indicator(NodeId target, std::span<const double> x) const {
    if (!contains(target)) throw structure_error("unknown node id " + std::to_string(target));
    check_input(x);
    NodeId cur = root_;
    while (true) {
        if (cur == target) return 1;
        const auto* d = std::get_if<DecisionNode>(&nodes_[cur]);
        if (!d) return 0;
        cur = d->test.fires(x[d->test.feature]) ? d->left : d->right;
    }
}

DecisionTree DecisionTree::branch(NodeId at) const {
    if (!contains(at)) throw structure_error("unknown node id " + std::to_string(at));
    DecisionTree out;
    std::function<NodeId(NodeId)> copy = [&](NodeId id) -> NodeId {
        if (const auto* d = std::get_if<DecisionNode>(&nodes_[id])) {
            NodeId slot = out.reserve_decision();
            NodeId l = copy(d->left);
            NodeId r = copy(d->right);
            out.fill_decision(slot, d->test, l, r);
            return slot;
        }
        return out.add_leaf(std::get<LeafNode>(nodes_[id]).label);
    };
    out.set_root(copy(at));
    return out;
}

ExtendedTestValue DecisionTree::extended_test(NodeId at, std::span<const double> x) const {
    const DecisionNode& d = decision(at);  // contract: leaves have no test
    if (node_domain_indicator(at, x) == 0) return ExtendedTestValue::alpha;
    return d.test.fires(x[d.test.feature]) ? ExtendedTestValue::one : ExtendedTestValue::zero;
}

std::string DecisionTree::to_json() const {
    json nodes = json::array();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        json n;
        n["id"] = static_cast<NodeId>(i);
        if (const auto* d = std::get_if<DecisionNode>(&nodes_[i])) {
            n["kind"] = "decision";
            n["feature"] = d->test.feature;
            n["theta"] = json::array({d->test.theta0, d->test.theta1});
            n["left"] = d->left;
            n["right"] = d->right;
        } else {
            n["kind"] = "leaf";
            n["label"] = std::get<LeafNode>(nodes_[i]).label;
        }
        nodes.push_back(std::move(n));
    }
    json doc;
    doc["root"] = root_;
    doc["nodes"] = std::move(nodes);
    return doc.dump();
}

DecisionTree DecisionTree::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("tree JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("root") || !doc.contains("nodes") || !doc["nodes"].is_array())
        throw parse_error("tree JSON: expected {root, nodes[]}");
    const json& nodes = doc["nodes"];
    DecisionTree t;
    t.nodes_.resize(nodes.size(), LeafNode{1});
    std::vector<char> filled(nodes.size(), 0);
    try {
        for (const json& n : nodes) {
            NodeId id = n.at("id").get<NodeId>();
            if (id < 0 || static_cast<std::size_t>(id) >= nodes.size() || filled[id])
                throw parse_error("tree JSON: node ids must be unique in [0, n)");
            filled[id] = 1;
            std::string kind = n.at("kind").get<std::string>();
            if (kind == "leaf") {
                t.nodes_[id] = LeafNode{n.at("label").get<int>()};
            } else if (kind == "decision") {
                const json& th = n.at("theta");
                if (!th.is_array() || th.size() != 2) throw parse_error("tree JSON: theta must be [theta0, theta1]");
                SplitTest test(n.at("feature").get<int>(), th[0].get<double>(), th[1].get<double>());
                t.nodes_[id] = DecisionNode{test, n.at("left").get<NodeId>(), n.at("right").get<NodeId>()};
            } else {
                throw parse_error("tree JSON: kind must be \"decision\" or \"leaf\"");
            }
        }
        t.root_ = doc.at("root").get<NodeId>();
    } catch (const json::exception& e) {
        throw parse_error(std::string("tree JSON: ") + e.what());
    }
    if (!t.contains(t.root_)) throw parse_error("tree JSON: root id out of range");
    t.validate();
    return t;
}

bool DecisionTree::operator==(const DecisionTree& other) const {
    if (root_ != other.root_ || nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& a = nodes_[i];
        const Node& b = other.nodes_[i];
        if (a.index() != b.index()) return false;
        if (const auto* da = std::get_if<DecisionNode>(&a)) {
            const auto& db = std::get<DecisionNode>(b);
            if (da->test.feature != db.test.feature || da->test.theta0 != db.test.theta0 ||
                da->test.theta1 != db.test.theta1 || da->left != db.left || da->right != db.right)
                return false;
        } else if (std::get<LeafNode>(a).label != std::get<LeafNode>(b).label) {
            return false;
        }
    }
    return true;
}

}  // namespace fairtree
