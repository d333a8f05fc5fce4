#include "fairtree/oracle.hpp"

#include <algorithm>
#include <random>
#include <set>

#include <json.hpp>

#include "fairtree/error.hpp"

namespace fairtree {

using json = nlohmann::json;

FiniteJointDistribution::FiniteJointDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw contract_error("FiniteJointDistribution: no atoms");
    Rational total;
    std::set<std::pair<std::vector<double>, int>> seen;
    std::size_t arity = atoms_[0].x.size();
    for (const Atom& at : atoms_) {
        if (at.x.size() != arity) throw contract_error("FiniteJointDistribution: ragged atom arity");
        if (at.a != 0 && at.a != 1) throw contract_error("FiniteJointDistribution: a must be 0/1");
        if (!(at.prob > Rational())) throw contract_error("FiniteJointDistribution: probs must be positive");
        if (!seen.insert({at.x, at.a}).second)
            throw contract_error("FiniteJointDistribution: duplicate (x, a) atom");
        total = total + at.prob;
    }
    if (!total.is_one()) throw contract_error("FiniteJointDistribution: probs must sum to 1, got " + total.str());
}

Rational FiniteJointDistribution::group_prob(int a) const {
    Rational p;
    for (const Atom& at : atoms_)
        if (at.a == a) p = p + at.prob;
    return p;
}

namespace {

void require_both_groups(const FiniteJointDistribution& dist) {
    if (dist.group_prob(0).is_zero() || dist.group_prob(1).is_zero())
        throw contract_error("oracle: degenerate protected-attribute marginal");
}

// P(E1 and E2) == P(E1) P(E2) for indicator functions over the atoms.
template <typename E1, typename E2>
bool independent(const FiniteJointDistribution& dist, E1&& e1, E2&& e2) {
    Rational p1, p2, p12;
    for (const auto& at : dist.atoms()) {
        bool b1 = e1(at);
        bool b2 = e2(at);
        if (b1) p1 = p1 + at.prob;
        if (b2) p2 = p2 + at.prob;
        if (b1 && b2) p12 = p12 + at.prob;
    }
    return p12 == p1 * p2;
}

}  // namespace

bool check_statistical_parity(const FiniteJointDistribution& dist, const DecisionTree& tree) {
    require_both_groups(dist);
    for (int yhat : {-1, 1}) {
        for (int a : {0, 1}) {
            bool ok = independent(
                dist, [&](const auto& at) { return tree.evaluate(at.x) == yhat; },
                [&](const auto& at) { return at.a == a; });
            if (!ok) return false;
        }
    }
    return true;
}

bool check_local_parity(const FiniteJointDistribution& dist, const DecisionTree& tree, NodeId node) {
    require_both_groups(dist);
    for (int d : {0, 1}) {
        for (int a : {0, 1}) {
            bool ok = independent(
                dist, [&](const auto& at) { return tree.node_domain_indicator(node, at.x) == d; },
                [&](const auto& at) { return at.a == a; });
            if (!ok) return false;
        }
    }
    return true;
}

ConditionalCheck check_test_hypothesis(const FiniteJointDistribution& dist, const DecisionTree& tree,
                                       NodeId node) {
    require_both_groups(dist);
    if (!tree.is_decision(node))
        throw structure_error("check_test_hypothesis: node is not a decision node");

    Rational pdom;
    for (const auto& at : dist.atoms())
        if (tree.node_domain_indicator(node, at.x) == 1) pdom = pdom + at.prob;
    if (pdom.is_zero()) return {true, true};  // empty conditioning event: vacuously satisfied

    // Conditional independence via cross-multiplication:
    // P(I=i, A=a, dom) * P(dom) == P(I=i, dom) * P(A=a, dom).
    for (ExtendedTestValue iv : {ExtendedTestValue::zero, ExtendedTestValue::one}) {
        for (int a : {0, 1}) {
            Rational p_ia, p_i, p_a;
            for (const auto& at : dist.atoms()) {
                if (tree.node_domain_indicator(node, at.x) != 1) continue;
                bool bi = tree.extended_test(node, at.x) == iv;
                bool ba = at.a == a;
                if (bi) p_i = p_i + at.prob;
                if (ba) p_a = p_a + at.prob;
                if (bi && ba) p_ia = p_ia + at.prob;
            }
            if (p_ia * pdom != p_i * p_a) return {false, false};
        }
    }
    return {true, false};
}

ImplicationDetail verify_lemma_terminal_detail(const FiniteJointDistribution& dist,
                                               const DecisionTree& tree) {
    bool hyp = true;
    for (NodeId t : tree.terminal_nodes())
        if (!check_local_parity(dist, tree, t)) {
            hyp = false;
            break;
        }
    ImplicationDetail out;
    out.hypothesis_held = hyp;
    out.implication = !hyp || check_statistical_parity(dist, tree);
    return out;
}

bool verify_lemma_terminal(const FiniteJointDistribution& dist, const DecisionTree& tree) {
    return verify_lemma_terminal_detail(dist, tree).implication;
}

ImplicationDetail verify_theorem_detail(const FiniteJointDistribution& dist, const DecisionTree& tree) {
    bool hyp = true;
    for (NodeId t : tree.decision_nodes())
        if (!check_test_hypothesis(dist, tree, t).holds) {
            hyp = false;
            break;
        }
    ImplicationDetail out;
    out.hypothesis_held = hyp;
    if (!hyp) {
        out.implication = true;
        return out;
    }
    // The intermediate conclusion (every node locally fair) and the final one
    // are both part of the claimed chain; check them separately.
    for (NodeId t = 0; t < static_cast<NodeId>(tree.node_count()); ++t)
        if (!check_local_parity(dist, tree, t)) {
            out.implication = false;
            return out;
        }
    out.implication = check_statistical_parity(dist, tree);
    return out;
}

bool verify_theorem(const FiniteJointDistribution& dist, const DecisionTree& tree) {
    return verify_theorem_detail(dist, tree).implication;
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

long pick(std::mt19937_64& rng, long bound) {
    std::uint64_t threshold = (-static_cast<std::uint64_t>(bound)) % static_cast<std::uint64_t>(bound);
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) return static_cast<long>(r % static_cast<std::uint64_t>(bound));
    }
}

// Random tree over the atoms' coordinate grid; thresholds sit at midpoints
// of adjacent distinct values so domains slice the atoms nontrivially.
DecisionTree random_tree(std::mt19937_64& rng, int p, const std::vector<std::vector<double>>& coord_values,
                         int max_depth) {
    DecisionTree tree;
    auto build = [&](auto&& self, int depth) -> NodeId {
        bool leaf = depth >= max_depth || pick(rng, 100) < 25 + 25 * depth;
        if (leaf) return tree.add_leaf(pick(rng, 2) == 0 ? -1 : 1);
        int feature = static_cast<int>(pick(rng, p));
        const auto& vals = coord_values[feature];
        double thr;
        if (vals.size() < 2) {
            thr = vals.empty() ? 0.0 : vals[0] + (pick(rng, 2) == 0 ? -0.5 : 0.5);
        } else {
            long i = pick(rng, static_cast<long>(vals.size()) - 1);
            thr = 0.5 * (vals[i] + vals[i + 1]);
        }
        // Orientation: x < thr (theta1 = -1) or x > thr (theta1 = +1).
        SplitTest test = pick(rng, 2) == 0 ? SplitTest(feature, thr, -1.0)
                                           : SplitTest(feature, -thr, 1.0);
        NodeId id = tree.reserve_decision();
        NodeId left = self(self, depth + 1);
        NodeId right = self(self, depth + 1);
        tree.fill_decision(id, test, left, right);
        return id;
    };
    tree.set_root(build(build, 0));
    tree.validate();
    return tree;
}

}  // namespace

TheoryInstance random_theory_instance(std::uint64_t seed, std::uint64_t index) {
    std::mt19937_64 rng(mix(seed, index));
    int p = 1 + static_cast<int>(pick(rng, 2));
    int n_atoms = 2 + static_cast<int>(pick(rng, 11));  // 2..12
    bool product = pick(rng, 100) < 30;                 // X independent of A slice

    std::vector<FiniteJointDistribution::Atom> atoms;
    const long denom = 64;

    if (product) {
        // Marginal over x-points times a marginal over a; independence holds
        // by construction. Weight budgets keep the common denominator <= 64.
        int n_points = 1 + static_cast<int>(pick(rng, 4));
        std::vector<std::vector<double>> points;
        std::set<std::vector<double>> uniq;
        for (int i = 0; i < n_points; ++i) {
            std::vector<double> x(p);
            for (int d = 0; d < p; ++d) x[d] = static_cast<double>(pick(rng, 7));
            if (uniq.insert(x).second) points.push_back(std::move(x));
        }
        long wa0 = 1 + pick(rng, 2), wa1 = 1 + pick(rng, 2);
        std::vector<long> wx(points.size());
        long wx_total = 0;
        for (auto& w : wx) {
            w = 1 + pick(rng, 4);
            wx_total += w;
        }
        for (std::size_t i = 0; i < points.size(); ++i) {
            atoms.push_back({points[i], 0, Rational(wx[i] * wa0, wx_total * (wa0 + wa1))});
            atoms.push_back({points[i], 1, Rational(wx[i] * wa1, wx_total * (wa0 + wa1))});
        }
    } else {
        std::set<std::pair<std::vector<double>, int>> uniq;
        std::vector<long> weights;
        for (int i = 0; i < n_atoms; ++i) {
            std::vector<double> x(p);
            for (int d = 0; d < p; ++d) x[d] = static_cast<double>(pick(rng, 7));
            int a = static_cast<int>(pick(rng, 2));
            if (uniq.insert({x, a}).second) weights.push_back(1 + pick(rng, 5));
        }
        // Guarantee both groups.
        std::vector<std::pair<std::vector<double>, int>> keys(uniq.begin(), uniq.end());
        bool has0 = false, has1 = false;
        for (const auto& k : keys) (k.second == 0 ? has0 : has1) = true;
        if (!has0 || !has1) {
            std::vector<double> x(p, 6.5);
            keys.push_back({x, has0 ? 1 : 0});
            weights.push_back(1);
        }
        long total = 0;
        for (long w : weights) total += w;
        if (total > denom) {
            // Scale into the <= 64 denominator budget by rebuilding weights.
            for (auto& w : weights) w = 1;
            total = static_cast<long>(weights.size());
        }
        for (std::size_t i = 0; i < keys.size(); ++i)
            atoms.push_back({keys[i].first, keys[i].second, Rational(weights[i], total)});
    }

    std::vector<std::vector<double>> coord_values(p);
    for (int d = 0; d < p; ++d) {
        std::set<double> vals;
        for (const auto& at : atoms) vals.insert(at.x[d]);
        coord_values[d].assign(vals.begin(), vals.end());
    }
    int max_depth = 1 + static_cast<int>(pick(rng, 3));
    DecisionTree tree = random_tree(rng, p, coord_values, std::min(max_depth, 3));
    return {FiniteJointDistribution(std::move(atoms)), std::move(tree)};
}

std::string TheoryReport::to_json() const {
    json j;
    j["instances"] = instances;
    j["lemma_terminal"] = {{"pass", lemma_pass},
                           {"fail", instances - lemma_pass},
                           {"hypothesis_held", lemma_hypothesis_held},
                           {"nonvacuity_fraction", lemma_nonvacuity()}};
    j["theorem"] = {{"pass", theorem_pass},
                    {"fail", instances - theorem_pass},
                    {"hypothesis_held", theorem_hypothesis_held},
                    {"nonvacuity_fraction", theorem_nonvacuity()}};
    j["all_passed"] = all_passed();
    return j.dump();
}

TheoryReport run_theory_verification(long long instances, std::uint64_t seed) {
    if (instances <= 0) throw contract_error("run_theory_verification: instances must be positive");
    TheoryReport rep;
    rep.instances = instances;
    for (long long i = 0; i < instances; ++i) {
        TheoryInstance inst = random_theory_instance(seed, static_cast<std::uint64_t>(i));
        ImplicationDetail lemma = verify_lemma_terminal_detail(inst.dist, inst.tree);
        ImplicationDetail theorem = verify_theorem_detail(inst.dist, inst.tree);
        rep.lemma_pass += lemma.implication ? 1 : 0;
        rep.theorem_pass += theorem.implication ? 1 : 0;
        rep.lemma_hypothesis_held += lemma.hypothesis_held ? 1 : 0;
        rep.theorem_hypothesis_held += theorem.hypothesis_held ? 1 : 0;
    }
    return rep;
}

}  // namespace fairtree
