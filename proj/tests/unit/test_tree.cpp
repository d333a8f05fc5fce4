#include <doctest.h>

#include <set>

#include "fairtree/error.hpp"
#include "fairtree/tree.hpp"
#include "test_util.hpp"

using namespace fairtree;
using testutil::unif;

namespace {

// Random tree with axis tests over p features, values in [-3, 3].
DecisionTree random_tree(std::mt19937_64& g, int p, int max_depth) {
    DecisionTree t;
    auto build = [&](auto&& self, int depth) -> NodeId {
        if (depth >= max_depth || unif(g) < 0.25)
            return t.add_leaf(unif(g) < 0.5 ? -1 : 1);
        int feature = static_cast<int>(g() % p);
        double thr = unif(g, -3.0, 3.0);
        SplitTest test = unif(g) < 0.5 ? SplitTest(feature, thr, -1.0) : SplitTest(feature, -thr, 1.0);
        NodeId id = t.reserve_decision();
        NodeId l = self(self, depth + 1);
        NodeId r = self(self, depth + 1);
        t.fill_decision(id, test, l, r);
        return id;
    };
    t.set_root(build(build, 0));
    t.validate();
    return t;
}

DecisionTree two_level_example() {
    // root: x0 < 1 ; left: x1 < 0 -> +1 / -1 ; right: leaf -1
    DecisionTree t;
    NodeId root = t.reserve_decision();
    NodeId inner = t.reserve_decision();
    NodeId l1 = t.add_leaf(1);
    NodeId l2 = t.add_leaf(-1);
    t.fill_decision(inner, SplitTest(1, 0.0, -1.0), l1, l2);
    NodeId l3 = t.add_leaf(-1);
    t.fill_decision(root, SplitTest(0, 1.0, -1.0), inner, l3);
    t.set_root(root);
    t.validate();
    return t;
}

}  // namespace

TEST_CASE("SplitTest construction rejects degenerate parameters") {
    CHECK_THROWS_AS(SplitTest(0, 0.0, 0.0), Error);
    CHECK_THROWS_AS(SplitTest(0, std::numeric_limits<double>::quiet_NaN(), 1.0), Error);
    CHECK_THROWS_AS(SplitTest(-1, 1.0, 1.0), Error);
    CHECK_NOTHROW(SplitTest(0, 0.0, -1.0));
}

TEST_CASE("evaluate: constant tree maps every case to its label") {
    DecisionTree t = DecisionTree::single_leaf(1);
    CHECK(t.evaluate(std::vector<double>{}) == 1);
    CHECK(t.evaluate(std::vector<double>{42.0, -7.0}) == 1);
}

TEST_CASE("evaluate: direct substitution into the linear test") {
    // Decision{feature 0, theta=(-2, 1)}, left=+1, right=-1; x=3 -> 0 < 1.
    DecisionTree t;
    NodeId root = t.reserve_decision();
    NodeId l = t.add_leaf(1);
    NodeId r = t.add_leaf(-1);
    t.fill_decision(root, SplitTest(0, -2.0, 1.0), l, r);
    t.set_root(root);
    CHECK(t.evaluate(std::vector<double>{3.0}) == 1);
    CHECK(t.evaluate(std::vector<double>{1.5}) == -1);
    // Boundary theta^T x == 0 routes right.
    CHECK(t.evaluate(std::vector<double>{2.0}) == -1);
}

TEST_CASE("evaluate input checking") {
    DecisionTree t = two_level_example();
    CHECK_THROWS_AS(t.evaluate(std::vector<double>{1.0}), Error);  // arity
    CHECK_THROWS_AS(t.evaluate(std::vector<double>{1.0, std::numeric_limits<double>::infinity()}),
                    Error);
}

TEST_CASE("evaluate agrees with an independent path tracer on a grid") {
    DecisionTree t = two_level_example();
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            std::vector<double> x{-2.0 + 0.45 * i, -2.0 + 0.45 * j};
            CHECK(t.evaluate(x) == testutil::trace_label(t, t.root(), x));
        }
    }
}

TEST_CASE("node_domain_indicator: root covers everything, path exactness") {
    DecisionTree t = two_level_example();
    std::vector<double> x{0.2, -0.7};
    CHECK(t.node_domain_indicator(t.root(), x) == 1);

    auto path = testutil::trace_path(t, x);
    std::set<NodeId> on_path(path.begin(), path.end());
    for (NodeId id = 0; id < static_cast<NodeId>(t.node_count()); ++id)
        CHECK(t.node_domain_indicator(id, x) == (on_path.count(id) ? 1 : 0));

    CHECK_THROWS_AS(t.node_domain_indicator(99, x), Error);
}

TEST_CASE("node_domain_indicator matches the half-interval oracle") {
    auto g = testutil::rng(20240811);
    for (int rep = 0; rep < 20; ++rep) {
        DecisionTree t = random_tree(g, 2, 3);
        for (int i = 0; i < 100; ++i) {
            std::vector<double> x{unif(g, -4.0, 4.0), unif(g, -4.0, 4.0)};
            for (NodeId id = 0; id < static_cast<NodeId>(t.node_count()); ++id) {
                auto box = testutil::interval_domain(t, id, 2);
                REQUIRE(box.has_value());
                CHECK(t.node_domain_indicator(id, x) == (box->contains(x) ? 1 : 0));
            }
        }
    }
}

TEST_CASE("branch: root branch is the whole tree, leaf branch is a single node") {
    DecisionTree t = two_level_example();
    CHECK(t.branch(t.root()) == t);
    for (NodeId leaf : t.terminal_nodes()) {
        DecisionTree b = t.branch(leaf);
        CHECK(b.node_count() == 1);
        CHECK(b.is_leaf(b.root()));
    }
}

TEST_CASE("branch evaluation continues the original tree's evaluation") {
    auto g = testutil::rng(777);
    for (int rep = 0; rep < 10; ++rep) {
        DecisionTree t = random_tree(g, 2, 3);
        for (NodeId id = 0; id < static_cast<NodeId>(t.node_count()); ++id) {
            DecisionTree sub = t.branch(id);
            for (int i = 0; i < 40; ++i) {
                std::vector<double> x{unif(g, -4.0, 4.0), unif(g, -4.0, 4.0)};
                if (t.node_domain_indicator(id, x) == 1) CHECK(sub.evaluate(x) == t.evaluate(x));
            }
        }
    }
}

TEST_CASE("extended_test: root never alpha, off-domain always alpha") {
    DecisionTree t = two_level_example();
    auto g = testutil::rng(99);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x{unif(g, -4.0, 4.0), unif(g, -4.0, 4.0)};
        CHECK(t.extended_test(t.root(), x) != ExtendedTestValue::alpha);
    }
    // x with x0 >= 1 leaves the inner node's domain.
    std::vector<double> out{2.5, 0.0};
    CHECK(t.extended_test(1, out) == ExtendedTestValue::alpha);
    // Leaves have no test.
    CHECK_THROWS_AS(t.extended_test(2, out), Error);
}

TEST_CASE("extended_test is alpha exactly off the node's domain") {
    auto g = testutil::rng(4242);
    int checked = 0;
    while (checked < 200) {
        DecisionTree t = random_tree(g, 2, 3);
        for (NodeId id : t.decision_nodes()) {
            std::vector<double> x{unif(g, -4.0, 4.0), unif(g, -4.0, 4.0)};
            bool alpha = t.extended_test(id, x) == ExtendedTestValue::alpha;
            CHECK(alpha == (t.node_domain_indicator(id, x) == 0));
            ++checked;
        }
    }
}

TEST_CASE("partition properties") {
    auto g = testutil::rng(1312);
    for (int rep = 0; rep < 15; ++rep) {
        DecisionTree t = random_tree(g, 2, 3);
        for (int i = 0; i < 50; ++i) {
            std::vector<double> x{unif(g, -4.0, 4.0), unif(g, -4.0, 4.0)};

            // Exactly one leaf's domain holds x, and it carries the label.
            int leaves_containing = 0;
            int label = 0;
            for (NodeId leaf : t.terminal_nodes())
                if (t.node_domain_indicator(leaf, x) == 1) {
                    ++leaves_containing;
                    label = std::get<LeafNode>(t.node(leaf)).label;
                }
            CHECK(leaves_containing == 1);
            CHECK(label == t.evaluate(x));

            for (NodeId id : t.decision_nodes()) {
                const auto& d = std::get<DecisionNode>(t.node(id));
                int in_parent = t.node_domain_indicator(id, x);
                int in_l = t.node_domain_indicator(d.left, x);
                int in_r = t.node_domain_indicator(d.right, x);
                if (in_parent == 1) {
                    CHECK(in_l + in_r == 1);
                    // Routing/extension coherence.
                    auto ext = t.extended_test(id, x);
                    CHECK((in_l == 1) == (ext == ExtendedTestValue::one));
                    CHECK((in_r == 1) == (ext == ExtendedTestValue::zero));
                } else {
                    CHECK(in_l + in_r == 0);
                }
            }
        }
    }
}

TEST_CASE("JSON round-trip is bit-exact and validates structure") {
    auto g = testutil::rng(555);
    for (int rep = 0; rep < 10; ++rep) {
        DecisionTree t = random_tree(g, 2, 3);
        std::string j = t.to_json();
        DecisionTree back = DecisionTree::from_json(j);
        CHECK(back == t);
        CHECK(back.to_json() == j);
    }

    CHECK_THROWS_AS(DecisionTree::from_json("{"), Error);
    CHECK_THROWS_AS(DecisionTree::from_json(R"({"root":0,"nodes":[]})"), Error);
    // Cycle: node 0 is its own child.
    CHECK_THROWS_AS(DecisionTree::from_json(
                        R"({"root":0,"nodes":[{"id":0,"kind":"decision","feature":0,)"
                        R"("theta":[0.0,1.0],"left":0,"right":1},{"id":1,"kind":"leaf","label":1}]})"),
                    Error);
    // Bad label.
    CHECK_THROWS_AS(DecisionTree::from_json(R"({"root":0,"nodes":[{"id":0,"kind":"leaf","label":2}]})"),
                    Error);
}
