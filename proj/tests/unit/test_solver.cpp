#include <doctest.h>

#include <cmath>

#include "fairtree/error.hpp"
#include "fairtree/solver.hpp"
#include "test_util.hpp"

using namespace fairtree;
using testutil::normal;
using testutil::unif;

namespace {

NodeFeatureData two_point_cov_example() {
    NodeFeatureData d;
    d.x = {1.0, -1.0};
    d.a = {1, 0};
    d.y = {1, -1};
    return d;
}

// Overlapping-classes toy data; the unconstrained optimum is finite and the
// group indicator is correlated with x so small c bites.
NodeFeatureData biased_toy(std::uint64_t seed, int n = 60) {
    auto g = testutil::rng(seed);
    NodeFeatureData d;
    for (int i = 0; i < n; ++i) {
        int y = i % 2 == 0 ? 1 : -1;
        int a = unif(g) < 0.5 ? 0 : 1;
        d.x.push_back(0.8 * y + 0.9 * (2 * a - 1) + 1.1 * normal(g));
        d.a.push_back(a);
        d.y.push_back(y);
    }
    return d;
}

}  // namespace

TEST_CASE("logistic_loss known values") {
    NodeFeatureData d;
    d.x = {0.4, -1.2, 3.0};
    d.a = {0, 1, 0};
    d.y = {1, -1, 1};
    CHECK(logistic_loss(Theta{0.0, 0.0}, d) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    NodeFeatureData single;
    single.x = {1.0};
    single.a = {0};
    single.y = {1};
    CHECK(logistic_loss(Theta{0.0, 10.0}, single) ==
          doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-12));
    CHECK(logistic_loss(Theta{0.0, 10.0}, single) == doctest::Approx(4.5398899216870535e-05));

    CHECK_THROWS_AS(logistic_loss(Theta{0, 0}, NodeFeatureData{}), Error);
}

TEST_CASE("logistic_loss stays finite and stable at extreme margins") {
    NodeFeatureData single;
    single.x = {1.0};
    single.a = {0};
    single.y = {1};
    double loss = logistic_loss(Theta{0.0, 700.0}, single);
    CHECK(std::isfinite(loss));
    CHECK(loss >= 0.0);
    loss = logistic_loss(Theta{0.0, -700.0}, single);
    CHECK(loss == doctest::Approx(700.0).epsilon(1e-12));
}

TEST_CASE("logistic_loss matches an extended-precision oracle") {
    auto g = testutil::rng(2025);
    for (int rep = 0; rep < 30; ++rep) {
        NodeFeatureData d;
        for (int i = 0; i < 20; ++i) {
            d.x.push_back(unif(g, -5.0, 5.0));
            d.a.push_back(unif(g) < 0.5 ? 0 : 1);
            d.y.push_back(unif(g) < 0.5 ? 1 : -1);
        }
        Theta theta{unif(g, -3.0, 3.0), unif(g, -3.0, 3.0)};
        double got = logistic_loss(theta, d);
        double want = testutil::loss_longdouble(theta, d);
        CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("loss_gradient known values") {
    // Balanced data: sum y = 0 and sum y*x = 0 -> zero gradient at origin.
    NodeFeatureData d;
    d.x = {1.0, 1.0, -1.0, -1.0};
    d.y = {1, -1, 1, -1};
    d.a = {0, 1, 0, 1};
    Theta grad = loss_gradient(Theta{0.0, 0.0}, d);
    CHECK(grad.intercept == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(grad.slope == doctest::Approx(0.0).epsilon(1e-15));

    NodeFeatureData single;
    single.x = {2.0};
    single.a = {0};
    single.y = {-1};
    grad = loss_gradient(Theta{0.0, 0.0}, single);
    CHECK(grad.intercept == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(grad.slope == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("loss_gradient matches central finite differences on 100 random pairs") {
    auto g = testutil::rng(31337);
    for (int rep = 0; rep < 100; ++rep) {
        NodeFeatureData d;
        int n = 5 + static_cast<int>(g() % 30);
        for (int i = 0; i < n; ++i) {
            d.x.push_back(unif(g, -4.0, 4.0));
            d.a.push_back(unif(g) < 0.5 ? 0 : 1);
            d.y.push_back(unif(g) < 0.5 ? 1 : -1);
        }
        Theta theta{unif(g, -2.0, 2.0), unif(g, -2.0, 2.0)};
        Theta got = loss_gradient(theta, d);
        Theta fd = testutil::central_difference_gradient(theta, d);
        CHECK(std::abs(got.intercept - fd.intercept) <= 1e-6 * std::max(1.0, std::abs(fd.intercept)));
        CHECK(std::abs(got.slope - fd.slope) <= 1e-6 * std::max(1.0, std::abs(fd.slope)));
    }
}

TEST_CASE("sample_cov_sd closed-form cases") {
    NodeFeatureData d = two_point_cov_example();
    CHECK(sample_cov_sd(Theta{0.0, 1.0}, d) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sample_cov_sd(Theta{0.0, 0.0}, d) == 0.0);
    CHECK(sample_cov_sd(Theta{123.0, 0.0}, d) == doctest::Approx(0.0).epsilon(1e-12));

    NodeFeatureData same;
    same.x = {0.4, 1.9, -2.2};
    same.a = {1, 1, 1};
    same.y = {1, -1, 1};
    CHECK(sample_cov_sd(Theta{3.0, -2.0}, same) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("sample_cov_sd is linear in theta") {
    auto g = testutil::rng(808);
    NodeFeatureData d = biased_toy(5);
    Theta t1{unif(g, -2, 2), unif(g, -2, 2)};
    Theta t2{unif(g, -2, 2), unif(g, -2, 2)};
    double c1 = sample_cov_sd(t1, d);
    double c2 = sample_cov_sd(t2, d);
    Theta sum{t1.intercept + 2.0 * t2.intercept, t1.slope + 2.0 * t2.slope};
    CHECK(sample_cov_sd(sum, d) == doctest::Approx(c1 + 2.0 * c2).epsilon(1e-10));
}

TEST_CASE("fit_constrained: effectively unconstrained fit matches the grid-search oracle") {
    NodeFeatureData d = biased_toy(42);
    ClrFit fit = fit_constrained(d, 1e9);
    CHECK(fit.converged);

    auto [theta, loss] = testutil::grid_refine(d, 1e9, 8.0);
    CHECK(std::abs(fit.theta.intercept - theta.intercept) <= 1e-3);
    CHECK(std::abs(fit.theta.slope - theta.slope) <= 1e-3);
    CHECK(fit.loss <= loss + 1e-9);
    CHECK(std::abs(logistic_loss(fit.theta, d) - fit.loss) <= 1e-9);
}

TEST_CASE("fit_constrained: constraint vacuous when every a is equal") {
    NodeFeatureData d = biased_toy(7);
    std::fill(d.a.begin(), d.a.end(), 1);
    ClrFit tight = fit_constrained(d, 1e-8);
    ClrFit loose = fit_constrained(d, 100.0);
    CHECK(tight.theta.intercept == loose.theta.intercept);
    CHECK(tight.theta.slope == loose.theta.slope);
    CHECK(tight.cov == 0.0);
}

TEST_CASE("fit_constrained: tiny c forces feasibility at a loss cost") {
    NodeFeatureData d = biased_toy(42);
    ClrFit free_fit = fit_constrained(d, 1e9);
    REQUIRE(std::abs(free_fit.cov) > 1e-4);  // the bound actually bites below

    ClrFit tight = fit_constrained(d, 1e-8);
    CHECK(std::abs(tight.cov) <= 1e-8 + 1e-9);
    CHECK(tight.loss >= free_fit.loss - 1e-9);

    auto [theta, oracle_loss] = testutil::grid_refine(d, 1e-8, 8.0);
    (void)theta;
    CHECK(tight.loss <= oracle_loss + 1e-3);
}

TEST_CASE("fit_constrained: feasibility invariant across c") {
    NodeFeatureData d = biased_toy(2024);
    for (double c : {1e-6, 1e-3, 0.01, 0.1, 1.0, 10.0}) {
        ClrFit fit = fit_constrained(d, c);
        CHECK(std::abs(fit.cov) <= c + 1e-9);
        CHECK(std::abs(sample_cov_sd(fit.theta, d) - fit.cov) <= 1e-7);
    }
}

TEST_CASE("fit_constrained: loss is monotone non-increasing in c") {
    NodeFeatureData d = biased_toy(99);
    double prev = std::numeric_limits<double>::infinity();
    for (double c : {0.01, 0.1, 1.0, 10.0}) {
        ClrFit fit = fit_constrained(d, c);
        CHECK(fit.loss <= prev + 1e-6);
        prev = fit.loss;
    }
}

TEST_CASE("fit_constrained: restarts land on the same optimum value") {
    NodeFeatureData d = biased_toy(1234);
    auto g = testutil::rng(7);
    ClrFit base = fit_constrained(d, 0.05);
    REQUIRE(base.converged);
    for (int i = 0; i < 5; ++i) {
        SolverOptions opts;
        opts.init_theta = Theta{unif(g, -2.0, 2.0), unif(g, -2.0, 2.0)};
        ClrFit fit = fit_constrained(d, 0.05, opts);
        CHECK(fit.converged);
        CHECK(std::abs(fit.loss - base.loss) <= 1e-5);
    }
}

TEST_CASE("fit_constrained: KKT stationarity holds at convergence") {
    auto g = testutil::rng(60601);
    int converged_count = 0;
    for (int rep = 0; rep < 40; ++rep) {
        NodeFeatureData d = testutil::random_solver_instance(g());
        double c = unif(g) < 0.5 ? unif(g, 0.001, 0.05) : unif(g, 0.1, 2.0);
        ClrFit fit = fit_constrained(d, c);
        CHECK(std::abs(fit.cov) <= c + 1e-9);
        if (fit.converged) {
            ++converged_count;
            CHECK(fit.kkt_residual <= 1e-6);
        }
    }
    CHECK(converged_count >= 36);
}

TEST_CASE("fit_constrained: degenerate feature fits intercept only") {
    NodeFeatureData d;
    d.x = {2.0, 2.0, 2.0, 2.0};
    d.a = {0, 1, 0, 1};
    d.y = {1, 1, 1, -1};
    ClrFit fit = fit_constrained(d, 0.1);
    CHECK(fit.degenerate_feature);
    CHECK(fit.theta.slope == 0.0);
    CHECK(fit.converged);
    // Optimal constant model: sigma(t0) = 3/4 -> t0 = log 3.
    CHECK(fit.theta.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-4));
}

TEST_CASE("fit_constrained contract errors") {
    NodeFeatureData d = biased_toy(1);
    CHECK_THROWS_AS(fit_constrained(d, 0.0), Error);
    CHECK_THROWS_AS(fit_constrained(d, -1.0), Error);
    CHECK_THROWS_AS(fit_constrained(NodeFeatureData{}, 1.0), Error);
}

TEST_CASE("fit_constrained: non-convergence is reported, not thrown") {
    NodeFeatureData d = biased_toy(404);
    SolverOptions opts;
    opts.max_iter = 2;  // nowhere near enough
    opts.stall_window = 1000;
    ClrFit fit = fit_constrained(d, 1e9, opts);
    CHECK_FALSE(fit.converged);
    CHECK(fit.iterations <= 2);
    CHECK(std::isfinite(fit.loss));
    CHECK(fit.kkt_residual > 1e-6);
}
