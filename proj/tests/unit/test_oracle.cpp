#include <doctest.h>

#include <map>

#include "fairtree/error.hpp"
#include "fairtree/oracle.hpp"
#include "fairtree/rational.hpp"
#include "test_util.hpp"

using namespace fairtree;

namespace {

using Atom = FiniteJointDistribution::Atom;

// x < threshold test tree with two leaves (+1 left, -1 right).
DecisionTree stump_below(double threshold, int feature = 0) {
    DecisionTree t;
    NodeId root = t.reserve_decision();
    NodeId l = t.add_leaf(1);
    NodeId r = t.add_leaf(-1);
    t.fill_decision(root, SplitTest(feature, threshold, -1.0), l, r);
    t.set_root(root);
    return t;
}

FiniteJointDistribution product_dist() {
    // (x in {0, 1}) independent of (a in {0, 1}) with P(x=0)=1/4, P(a=0)=1/3.
    return FiniteJointDistribution({
        Atom{{0.0}, 0, Rational(1, 12)},
        Atom{{0.0}, 1, Rational(2, 12)},
        Atom{{1.0}, 0, Rational(3, 12)},
        Atom{{1.0}, 1, Rational(6, 12)},
    });
}

FiniteJointDistribution correlated_two_atoms() {
    // P(x=0, a=0) = P(x=1, a=1) = 1/2: the stump at 1/2 reproduces A exactly.
    return FiniteJointDistribution({
        Atom{{0.0}, 0, Rational(1, 2)},
        Atom{{1.0}, 1, Rational(1, 2)},
    });
}

// Second, independently-coded conditional independence tabulation; walks the
// tree itself rather than calling the library's extended_test.
int independent_extended_value(const DecisionTree& t, NodeId target, const std::vector<double>& x) {
    // value 2 = alpha
    std::function<int(NodeId)> walk = [&](NodeId id) -> int {
        const auto& node = t.node(id);
        const auto* d = std::get_if<DecisionNode>(&node);
        bool fires = false;
        if (d) fires = d->test.theta0 + d->test.theta1 * x[d->test.feature] > 0.0;
        if (id == target) return fires ? 1 : 0;
        if (!d) return 2;
        return walk(fires ? d->left : d->right);
    };
    return walk(t.root());
}

bool independent_conditional_check(const FiniteJointDistribution& dist, const DecisionTree& t,
                                   NodeId node) {
    std::map<std::pair<int, int>, Rational> joint;  // (ext value, a) -> prob, over dom = 1
    Rational pdom;
    for (const auto& at : dist.atoms()) {
        int v = independent_extended_value(t, node, at.x);
        if (v == 2) continue;
        joint[{v, at.a}] = joint[{v, at.a}] + at.prob;
        pdom = pdom + at.prob;
    }
    if (pdom.is_zero()) return true;
    for (int v : {0, 1}) {
        for (int a : {0, 1}) {
            Rational pv = joint[{v, 0}] + joint[{v, 1}];
            Rational pa = joint[{0, a}] + joint[{1, a}];
            if (joint[{v, a}] * pdom != pv * pa) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("Rational arithmetic is exact") {
    Rational a(1, 3), b(1, 6);
    CHECK(a + b == Rational(1, 2));
    CHECK(a - b == Rational(1, 6));
    CHECK(a * b == Rational(1, 18));
    CHECK(a / b == Rational(2, 1));
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(Rational(-1, -2) == Rational(1, 2));
    CHECK(Rational(1, -2) < Rational());
    CHECK_THROWS_AS(Rational(1, 0), Error);
    CHECK_THROWS_AS(a / Rational(0, 5), Error);
}

TEST_CASE("FiniteJointDistribution validates atoms") {
    CHECK_THROWS_AS(FiniteJointDistribution({}), Error);
    CHECK_THROWS_AS(FiniteJointDistribution({Atom{{0.0}, 0, Rational(1, 2)}}), Error);  // sums to 1/2
    CHECK_THROWS_AS(FiniteJointDistribution({
                        Atom{{0.0}, 0, Rational(1, 2)},
                        Atom{{0.0}, 0, Rational(1, 2)},
                    }),
                    Error);  // duplicate (x, a)
}

TEST_CASE("check_statistical_parity basics") {
    DecisionTree constant = DecisionTree::single_leaf(1);
    CHECK(check_statistical_parity(product_dist(), constant));
    CHECK(check_statistical_parity(correlated_two_atoms(), constant));

    DecisionTree stump = stump_below(0.5);
    CHECK(check_statistical_parity(product_dist(), stump));
    CHECK_FALSE(check_statistical_parity(correlated_two_atoms(), stump));

    FiniteJointDistribution degenerate({Atom{{0.0}, 0, Rational(1, 2)}, Atom{{1.0}, 0, Rational(1, 2)}});
    CHECK_THROWS_AS(check_statistical_parity(degenerate, stump), Error);
}

TEST_CASE("check_local_parity basics") {
    DecisionTree stump = stump_below(0.5);
    CHECK(check_local_parity(product_dist(), stump, stump.root()));
    CHECK(check_local_parity(correlated_two_atoms(), stump, stump.root()));  // root always

    for (NodeId node = 0; node < 3; ++node)
        CHECK(check_local_parity(product_dist(), stump, node));

    // Left child's domain indicator equals 1 - A under the correlated pair.
    CHECK_FALSE(check_local_parity(correlated_two_atoms(), stump, 1));
    CHECK_THROWS_AS(check_local_parity(product_dist(), stump, 57), Error);
}

TEST_CASE("check_test_hypothesis basics and vacuous conditioning") {
    DecisionTree stump = stump_below(0.5);
    auto ok = check_test_hypothesis(product_dist(), stump, stump.root());
    CHECK(ok.holds);
    CHECK_FALSE(ok.vacuous);

    auto bad = check_test_hypothesis(correlated_two_atoms(), stump, stump.root());
    CHECK_FALSE(bad.holds);

    // A two-level tree whose inner node's domain has zero probability.
    DecisionTree t;
    NodeId root = t.reserve_decision();
    NodeId inner = t.reserve_decision();
    t.fill_decision(inner, SplitTest(0, 0.25, -1.0), t.add_leaf(1), t.add_leaf(-1));
    // Root: x < -5 -> left (empty under both dists).
    t.fill_decision(root, SplitTest(0, -5.0, -1.0), inner, t.add_leaf(-1));
    t.set_root(root);
    t.validate();
    auto vac = check_test_hypothesis(product_dist(), t, inner);
    CHECK(vac.holds);
    CHECK(vac.vacuous);

    CHECK_THROWS_AS(check_test_hypothesis(product_dist(), stump, 1), Error);  // leaf node
}

TEST_CASE("conditional independence agrees with a second enumeration") {
    for (int i = 0; i < 400; ++i) {
        TheoryInstance inst = random_theory_instance(5150, i);
        for (NodeId node : inst.tree.decision_nodes()) {
            auto lib = check_test_hypothesis(inst.dist, inst.tree, node);
            bool mine = independent_conditional_check(inst.dist, inst.tree, node);
            CHECK(lib.holds == mine);
        }
    }
}

TEST_CASE("lemma and theorem hold on every random instance") {
    long hyp_lemma = 0, hyp_theorem = 0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        TheoryInstance inst = random_theory_instance(31415, i);
        auto lemma = verify_lemma_terminal_detail(inst.dist, inst.tree);
        auto theorem = verify_theorem_detail(inst.dist, inst.tree);
        REQUIRE(lemma.implication);
        REQUIRE(theorem.implication);
        hyp_lemma += lemma.hypothesis_held;
        hyp_theorem += theorem.hypothesis_held;
    }
    // Anti-vacuity: the hypotheses must actually hold on a solid slice.
    CHECK(hyp_lemma > n / 10);
    CHECK(hyp_theorem > n / 10);
}

TEST_CASE("product distributions satisfy the hypotheses non-vacuously") {
    DecisionTree stump = stump_below(0.5);
    auto lemma = verify_lemma_terminal_detail(product_dist(), stump);
    CHECK(lemma.hypothesis_held);
    CHECK(lemma.implication);
    auto theorem = verify_theorem_detail(product_dist(), stump);
    CHECK(theorem.hypothesis_held);
    CHECK(theorem.implication);
}

TEST_CASE("correlated instance: hypothesis fails, implication vacuously true") {
    DecisionTree stump = stump_below(0.5);
    auto lemma = verify_lemma_terminal_detail(correlated_two_atoms(), stump);
    CHECK_FALSE(lemma.hypothesis_held);
    CHECK(lemma.implication);
}

TEST_CASE("hand-built 6-atom instance: hypothesis holds though X and A are dependent") {
    // Tree: x < 2 -> +1 else -1. Atoms engineered so that A is independent of
    // the root test yet X carries group information.
    FiniteJointDistribution dist({
        Atom{{0.0}, 0, Rational(1, 8)},
        Atom{{1.0}, 0, Rational(1, 8)},
        Atom{{3.0}, 0, Rational(1, 4)},
        Atom{{0.0}, 1, Rational(1, 4)},
        Atom{{3.0}, 1, Rational(1, 8)},
        Atom{{4.0}, 1, Rational(1, 8)},
    });
    DecisionTree tree = stump_below(2.0);

    // X and A are NOT independent: P(x=0, a=0) = 1/8 != P(x=0) P(a=0) = 3/16.
    Rational px0 = Rational(1, 8) + Rational(1, 4);
    Rational pa0 = Rational(1, 2);
    CHECK(px0 * pa0 != Rational(1, 8));

    auto theorem = verify_theorem_detail(dist, tree);
    CHECK(theorem.hypothesis_held);  // the meat: a non-product distribution
    CHECK(theorem.implication);
    CHECK(check_statistical_parity(dist, tree));
    for (NodeId node = 0; node < static_cast<NodeId>(tree.node_count()); ++node)
        CHECK(check_local_parity(dist, tree, node));
}

TEST_CASE("statistical parity equivalence with exact SP differences") {
    // check_statistical_parity == (exact SP == 0 and the y = -1 analogue == 0).
    for (int i = 0; i < 300; ++i) {
        TheoryInstance inst = random_theory_instance(2718, i);
        Rational pa0 = inst.dist.group_prob(0);
        Rational pa1 = inst.dist.group_prob(1);
        Rational pos0, pos1, neg0, neg1;
        for (const auto& at : inst.dist.atoms()) {
            int label = inst.tree.evaluate(at.x);
            if (at.a == 0) (label == 1 ? pos0 : neg0) = (label == 1 ? pos0 : neg0) + at.prob;
            else (label == 1 ? pos1 : neg1) = (label == 1 ? pos1 : neg1) + at.prob;
        }
        Rational sp_pos = pos1 / pa1 - pos0 / pa0;
        Rational sp_neg = neg1 / pa1 - neg0 / pa0;
        bool parity = check_statistical_parity(inst.dist, inst.tree);
        CHECK(parity == (sp_pos == Rational() && sp_neg == Rational()));
    }
}

TEST_CASE("theory report JSON") {
    TheoryReport rep = run_theory_verification(50, 9);
    CHECK(rep.all_passed());
    std::string j = rep.to_json();
    CHECK(j.find("\"instances\":50") != std::string::npos);
    CHECK(j.find("nonvacuity_fraction") != std::string::npos);
    CHECK_THROWS_AS(run_theory_verification(0, 1), Error);
}
