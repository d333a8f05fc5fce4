#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairtree/rational.hpp"
#include "fairtree/tree.hpp"

namespace fairtree {

// Explicit probability table over (x, a) atoms; all oracle arithmetic on it
// is exact rational, no tolerances anywhere.
class FiniteJointDistribution {
public:
    struct Atom {
        std::vector<double> x;
        int a;  // 0/1
        Rational prob;
    };

    explicit FiniteJointDistribution(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    Rational group_prob(int a) const;

private:
    std::vector<Atom> atoms_;
};

// P(T(X)=y, A=a) == P(T(X)=y) P(A=a) for all four (y, a) combinations.
bool check_statistical_parity(const FiniteJointDistribution& dist, const DecisionTree& tree);

// A independent of dom_{T_t}(X) at one node.
bool check_local_parity(const FiniteJointDistribution& dist, const DecisionTree& tree, NodeId node);

struct ConditionalCheck {
    bool holds = false;
    bool vacuous = false;  // P(dom = 1) == 0: conditioning event empty
};

// A independent of I*_t(X) given dom_{T_t}(X) = 1, for a decision node.
ConditionalCheck check_test_hypothesis(const FiniteJointDistribution& dist, const DecisionTree& tree,
                                       NodeId node);

// Implication instances of the two proved results; both must come back true
// on every instance.
bool verify_lemma_terminal(const FiniteJointDistribution& dist, const DecisionTree& tree);
bool verify_theorem(const FiniteJointDistribution& dist, const DecisionTree& tree);

// Hypothesis-side detail so the runner can report non-vacuity.
struct ImplicationDetail {
    bool implication = false;
    bool hypothesis_held = false;
};
ImplicationDetail verify_lemma_terminal_detail(const FiniteJointDistribution& dist,
                                               const DecisionTree& tree);
ImplicationDetail verify_theorem_detail(const FiniteJointDistribution& dist, const DecisionTree& tree);

struct TheoryInstance {
    FiniteJointDistribution dist;
    DecisionTree tree;
};

// Random instances: trees of depth <= 3 over p <= 2 features with thresholds
// at atom-coordinate midpoints; distributions with <= 12 atoms on one common
// denominator <= 64. A slice of product (X independent of A) distributions
// keeps the hypotheses non-vacuous.
TheoryInstance random_theory_instance(std::uint64_t seed, std::uint64_t index);

struct TheoryReport {
    long long instances = 0;
    long long lemma_pass = 0;
    long long theorem_pass = 0;
    long long lemma_hypothesis_held = 0;
    long long theorem_hypothesis_held = 0;

    double lemma_nonvacuity() const {
        return instances ? static_cast<double>(lemma_hypothesis_held) / instances : 0.0;
    }
    double theorem_nonvacuity() const {
        return instances ? static_cast<double>(theorem_hypothesis_held) / instances : 0.0;
    }
    bool all_passed() const { return lemma_pass == instances && theorem_pass == instances; }
    std::string to_json() const;
};

TheoryReport run_theory_verification(long long instances, std::uint64_t seed);

}  // namespace fairtree
