#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fairtree {

// Parameters of a univariate linear classifier sign(intercept + slope * x).
struct Theta {
    double intercept = 0.0;
    double slope = 0.0;
};

// Per-node, per-feature training tuples (x_j, a, y): the projection of the
// node's cases onto one predictor.
struct NodeFeatureData {
    std::vector<double> x;
    std::vector<int> a;  // 0/1 protected group
    std::vector<int> y;  // -1/+1 label

    std::size_t size() const { return x.size(); }
};

struct SolverOptions {
    int max_iter = 5000;
    double kkt_tol = 1e-6;
    double feas_tol = 1e-9;
    double initial_step = 1.0;
    double armijo_slope = 1e-4;
    double backtrack = 0.5;
    // Accepted steps whose relative loss decrease stays below stall_tol for
    // stall_window consecutive iterations stop the loop early; separable
    // data otherwise burns the full iteration budget drifting to infinity.
    int stall_window = 20;
    double stall_tol = 1e-14;
    std::uint64_t seed = 0;  // randomized restart tests
    std::optional<Theta> init_theta;
};

struct ClrFit {
    Theta theta;
    double loss = 0.0;
    double cov = 0.0;  // sample covariance between the signed distance and A
    double c = 0.0;    // bound the fit was run with
    int iterations = 0;
    bool converged = false;
    double kkt_residual = 0.0;
    bool degenerate_feature = false;  // zero-variance x: intercept-only fit
};

// Mean logistic loss (1/n) sum log(1 + exp(-y_i (t0 + t1 x_i))),
// evaluated with the log1p-exp formulation so it stays finite for
// margins up to +-700 and beyond.
double logistic_loss(const Theta& theta, const NodeFeatureData& data);

// Analytic gradient of logistic_loss.
Theta loss_gradient(const Theta& theta, const NodeFeatureData& data);

// (1/n) sum (a_i - mean(a)) * (t0 + t1 x_i). Linear in theta; centering the
// group indicator alone is enough for a covariance.
double sample_cov_sd(const Theta& theta, const NodeFeatureData& data);

// Minimizes logistic_loss subject to |sample_cov_sd| <= c by projected
// gradient descent with Armijo backtracking; the feasible set is the slab
// -c <= g.theta <= c with g = (1/n) sum (a_i - mean(a)) (1, x_i), projected
// in closed form. c may be +infinity (unconstrained / LRT path). Features
// are standardized internally and theta is returned in the original scale.
ClrFit fit_constrained(const NodeFeatureData& data, double c, const SolverOptions& opts = {});

std::string solver_options_to_json(const SolverOptions& opts);
SolverOptions solver_options_from_json(const std::string& text);

}  // namespace fairtree
