#include "fairtree/solver.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fairtree/error.hpp"

namespace fairtree {

using json = nlohmann::json;

namespace {

void require_nonempty(const NodeFeatureData& data, const char* who) {
    if (data.x.empty()) throw contract_error(std::string(who) + ": empty data");
    if (data.a.size() != data.x.size() || data.y.size() != data.x.size())
        throw contract_error(std::string(who) + ": ragged columns");
}

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    double e = std::exp(t);
    return e / (1.0 + e);
}

// log(1 + exp(-m)) without overflow for large |m|.
double softplus_neg(double m) {
    if (m >= 0.0) return std::log1p(std::exp(-m));
    return -m + std::log1p(std::exp(m));
}

double group_mean(const NodeFeatureData& data) {
    double s = 0.0;
    for (int ai : data.a) s += ai;
    return s / static_cast<double>(data.size());
}

struct Slab {
    // Feasible set {theta : -c <= g . theta <= c}; g0 is always 0 because the
    // centered group indicator sums to zero, but the projection is written
    // for a general g.
    double g0 = 0.0;
    double g1 = 0.0;
    double c = 0.0;
    bool active = false;  // false: unconstrained (g == 0 or c == inf)

    double value(const Theta& t) const { return g0 * t.intercept + g1 * t.slope; }

    Theta project(const Theta& t) const {
        if (!active) return t;
        double v = value(t);
        if (v <= c && v >= -c) return t;  // interior: untouched, bit for bit
        double nsq = g0 * g0 + g1 * g1;
        double target = v > c ? c : -c;
        Theta out = t;
        for (int pass = 0; pass < 4; ++pass) {
            double scale = (value(out) - target) / nsq;
            out.intercept -= scale * g0;
            out.slope -= scale * g1;
            double r = value(out);
            if (r <= c && r >= -c) return out;
            target = std::copysign(c * (1.0 - 1e-15 * (pass + 1)), r);
        }
        return out;
    }
};

}  // namespace

double logistic_loss(const Theta& theta, const NodeFeatureData& data) {
    require_nonempty(data, "logistic_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double m = data.y[i] * (theta.intercept + theta.slope * data.x[i]);
        acc += softplus_neg(m);
    }
    return acc / static_cast<double>(data.size());
}

Theta loss_gradient(const Theta& theta, const NodeFeatureData& data) {
    require_nonempty(data, "loss_gradient");
    double g0 = 0.0, g1 = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double m = data.y[i] * (theta.intercept + theta.slope * data.x[i]);
        double w = sigmoid(-m) * data.y[i];
        g0 -= w;
        g1 -= w * data.x[i];
    }
    double n = static_cast<double>(data.size());
    return Theta{g0 / n, g1 / n};
}

double sample_cov_sd(const Theta& theta, const NodeFeatureData& data) {
    require_nonempty(data, "sample_cov_sd");
    double abar = group_mean(data);
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        acc += (data.a[i] - abar) * (theta.intercept + theta.slope * data.x[i]);
    return acc / static_cast<double>(data.size());
}

ClrFit fit_constrained(const NodeFeatureData& data, double c, const SolverOptions& opts) {
    require_nonempty(data, "fit_constrained");
    if (std::isnan(c) || c <= 0.0) throw contract_error("fit_constrained: c must be positive");
    for (double v : data.x)
        if (!std::isfinite(v)) throw contract_error("fit_constrained: non-finite feature value");

    const double n = static_cast<double>(data.size());

    double mean = 0.0;
    for (double v : data.x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : data.x) var += (v - mean) * (v - mean);
    var /= n;
    double sd = std::sqrt(var);
    const bool degenerate = !(sd > 1e-150);

    NodeFeatureData std_data;
    std_data.x.resize(data.size());
    std_data.a = data.a;
    std_data.y = data.y;
    if (degenerate) {
        std::fill(std_data.x.begin(), std_data.x.end(), 0.0);
    } else {
        for (std::size_t i = 0; i < data.size(); ++i) std_data.x[i] = (data.x[i] - mean) / sd;
    }

    const double abar = group_mean(std_data);
    Slab slab;
    slab.g1 = 0.0;
    for (std::size_t i = 0; i < std_data.size(); ++i)
        slab.g1 += (std_data.a[i] - abar) * std_data.x[i];
    slab.g1 /= n;
    slab.c = c;
    slab.active = std::isfinite(c) && slab.g1 != 0.0;

    Theta phi{0.0, 0.0};
    if (opts.init_theta) {
        // Map a caller-provided original-scale start into standardized space.
        phi.slope = degenerate ? 0.0 : opts.init_theta->slope * sd;
        phi.intercept = opts.init_theta->intercept + opts.init_theta->slope * mean;
        phi = slab.project(phi);
    }

    double loss = logistic_loss(phi, std_data);
    double step = opts.initial_step;
    int iterations = 0;
    bool converged = false;
    double kkt_residual = 0.0;
    int stalled = 0;

    auto kkt = [&](const Theta& grad, const Theta& at) {
        double nsq = slab.g0 * slab.g0 + slab.g1 * slab.g1;
        double v = slab.value(at);
        bool boundary = slab.active && std::abs(v) >= c - opts.feas_tol;
        if (!boundary || nsq == 0.0)
            return std::sqrt(grad.intercept * grad.intercept + grad.slope * grad.slope);
        double sgn = v >= 0.0 ? 1.0 : -1.0;
        double mu = std::max(0.0, -sgn * (grad.intercept * slab.g0 + grad.slope * slab.g1) / nsq);
        double r0 = grad.intercept + mu * sgn * slab.g0;
        double r1 = grad.slope + mu * sgn * slab.g1;
        return std::sqrt(r0 * r0 + r1 * r1);
    };

    for (int k = 0; k < opts.max_iter; ++k) {
        Theta grad = loss_gradient(phi, std_data);

        Theta unit{phi.intercept - grad.intercept, phi.slope - grad.slope};
        Theta proj = slab.project(unit);
        double pg0 = phi.intercept - proj.intercept;
        double pg1 = phi.slope - proj.slope;
        double pg_norm = std::sqrt(pg0 * pg0 + pg1 * pg1);
        kkt_residual = kkt(grad, phi);
        if (pg_norm <= opts.kkt_tol && kkt_residual <= opts.kkt_tol) {
            converged = true;
            break;
        }

        step = std::min(step * 2.0, 1e8);
        bool accepted = false;
        while (step > 1e-20) {
            Theta cand = slab.project(
                Theta{phi.intercept - step * grad.intercept, phi.slope - step * grad.slope});
            double cand_loss = logistic_loss(cand, std_data);
            double slope_term = grad.intercept * (cand.intercept - phi.intercept) +
                                grad.slope * (cand.slope - phi.slope);
            if (cand_loss <= loss + opts.armijo_slope * slope_term) {
                double decrease = loss - cand_loss;
                phi = cand;
                loss = cand_loss;
                accepted = true;
                ++iterations;
                if (decrease <= opts.stall_tol * std::max(1.0, std::abs(cand_loss)))
                    ++stalled;
                else
                    stalled = 0;
                break;
            }
            step *= opts.backtrack;
        }
        if (!accepted || stalled >= opts.stall_window) break;
    }

    if (!converged) {
        // The loop may have exited via stall/budget right at the optimum.
        Theta grad = loss_gradient(phi, std_data);
        Theta proj = slab.project(Theta{phi.intercept - grad.intercept, phi.slope - grad.slope});
        double pg0 = phi.intercept - proj.intercept;
        double pg1 = phi.slope - proj.slope;
        kkt_residual = kkt(grad, phi);
        converged = std::sqrt(pg0 * pg0 + pg1 * pg1) <= opts.kkt_tol && kkt_residual <= opts.kkt_tol;
    }

    ClrFit fit;
    fit.degenerate_feature = degenerate;
    if (degenerate) {
        fit.theta = Theta{phi.intercept, 0.0};
    } else {
        fit.theta = Theta{phi.intercept - phi.slope * (mean / sd), phi.slope / sd};
    }
    fit.loss = loss;
    // Equal to the original-scale covariance of the back-transformed theta:
    // cov is invariant under the affine feature rescaling.
    fit.cov = slab.value(phi);
    fit.c = c;
    fit.iterations = iterations;
    fit.kkt_residual = kkt_residual;
    fit.converged = converged && std::abs(fit.cov) <= c + opts.feas_tol;
    return fit;
}

std::string solver_options_to_json(const SolverOptions& o) {
    json j;
    j["max_iter"] = o.max_iter;
    j["kkt_tol"] = o.kkt_tol;
    j["feas_tol"] = o.feas_tol;
    j["initial_step"] = o.initial_step;
    j["armijo_slope"] = o.armijo_slope;
    j["backtrack"] = o.backtrack;
    j["stall_window"] = o.stall_window;
    j["stall_tol"] = o.stall_tol;
    j["seed"] = o.seed;
    if (o.init_theta)
        j["init_theta"] = json::array({o.init_theta->intercept, o.init_theta->slope});
    else
        j["init_theta"] = nullptr;
    return j.dump();
}

SolverOptions solver_options_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("solver options JSON: ") + e.what());
    }
    if (!j.is_object()) throw parse_error("solver options JSON: expected an object");
    SolverOptions o;
    try {
        if (j.contains("max_iter")) o.max_iter = j["max_iter"].get<int>();
        if (j.contains("kkt_tol")) o.kkt_tol = j["kkt_tol"].get<double>();
        if (j.contains("feas_tol")) o.feas_tol = j["feas_tol"].get<double>();
        if (j.contains("initial_step")) o.initial_step = j["initial_step"].get<double>();
        if (j.contains("armijo_slope")) o.armijo_slope = j["armijo_slope"].get<double>();
        if (j.contains("backtrack")) o.backtrack = j["backtrack"].get<double>();
        if (j.contains("stall_window")) o.stall_window = j["stall_window"].get<int>();
        if (j.contains("stall_tol")) o.stall_tol = j["stall_tol"].get<double>();
        if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("init_theta") && !j["init_theta"].is_null()) {
            const json& t = j["init_theta"];
            if (!t.is_array() || t.size() != 2)
                throw parse_error("solver options JSON: init_theta must be [t0, t1]");
            o.init_theta = Theta{t[0].get<double>(), t[1].get<double>()};
        }
    } catch (const json::exception& e) {
        throw parse_error(std::string("solver options JSON: ") + e.what());
    }
    return o;
}

}  // namespace fairtree
