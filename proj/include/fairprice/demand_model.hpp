#pragma once

#include "fairprice/errors.hpp"
#include "fairprice/numerics.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairprice {

enum class LinkKind { Linear, Logistic, Exponential };

inline std::string_view to_string(LinkKind kind) {
    switch (kind) {
    case LinkKind::Linear: return "linear";
    case LinkKind::Logistic: return "logistic";
    case LinkKind::Exponential: return "exponential";
    }
    return "unknown";
}

inline LinkKind link_kind_from_string(std::string_view name) {
    if (name == "linear") return LinkKind::Linear;
    if (name == "logistic") return LinkKind::Logistic;
    if (name == "exponential") return LinkKind::Exponential;
    throw ConfigError("unknown link '" + std::string(name) + "'");
}

/**
 * Link function f mapping the demand argument to expected demand.
 *
 * The checked accessors throw DomainError outside the link's domain
 * (u < 0 for Exponential). The `*_ext` accessors evaluate the analytic
 * continuation everywhere, which search routines use so that they never
 * throw while probing infeasible prices.
 */
struct Link {
    LinkKind kind = LinkKind::Linear;

    double domain_min() const {
        return kind == LinkKind::Exponential ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    bool in_domain(double u) const { return u >= domain_min(); }

    double value(double u) const {
        check(u);
        return value_ext(u);
    }
    double derivative(double u) const {
        check(u);
        return derivative_ext(u);
    }
    double second_derivative(double u) const {
        check(u);
        return second_derivative_ext(u);
    }

    double value_ext(double u) const {
        switch (kind) {
        case LinkKind::Linear: return u;
        case LinkKind::Logistic: return logistic(u);
        case LinkKind::Exponential: return -std::expm1(-u);
        }
        return 0.0;
    }
    double derivative_ext(double u) const {
        switch (kind) {
        case LinkKind::Linear: return 1.0;
        case LinkKind::Logistic: {
            const double s = logistic(u);
            return s * (1.0 - s);
        }
        case LinkKind::Exponential: return std::exp(-u);
        }
        return 0.0;
    }
    double second_derivative_ext(double u) const {
        switch (kind) {
        case LinkKind::Linear: return 0.0;
        case LinkKind::Logistic: {
            const double s = logistic(u);
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
        case LinkKind::Exponential: return -std::exp(-u);
        }
        return 0.0;
    }

    static double logistic(double u) {
        if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
        const double e = std::exp(u);
        return e / (1.0 + e);
    }

private:
    void check(double u) const {
        if (!in_domain(u))
            throw DomainError("exponential link evaluated at u = " + std::to_string(u) + " < 0");
    }
};

inline double link_eval(const Link& link, double u) { return link.value(u); }

/// Generalized-linear demand: E[y | u, p] = f(u - c * alpha0 * p) with u = x'theta0.
struct DemandModel {
    Link link;
    std::vector<double> theta0;
    double alpha0 = 1.0;
    /// Multiplier c on the price term. 0.5 matches the estimation convention, 1.0 the plain GLM form.
    double price_coeff = 0.5;
    double price_min = 0.0;
    double price_max = 1.0;

    Interval price_interval() const { return {price_min, price_max}; }

    void validate() const {
        if (!(alpha0 > 0.0)) throw ConfigError("alpha0 must be positive");
        if (!(price_min < price_max)) throw ConfigError("price_min must be below price_max");
        if (price_min < 0.0) throw ConfigError("price_min must be non-negative");
        if (!(price_coeff > 0.0)) throw ConfigError("price_coeff must be positive");
    }

    double price_slope() const { return price_coeff * alpha0; }
    double demand_argument(double u, double p) const { return u - price_slope() * p; }
    double baseline_utility(std::span<const double> x) const { return dot(x, theta0); }

    double expected_demand(double u, double p) const { return link.value(demand_argument(u, p)); }
};

/// r_u(p) = p * f(u - c alpha0 p). Throws DomainError when the argument leaves the link domain.
inline double expected_revenue(const DemandModel& model, double u, double p) {
    return p * model.link.value(model.demand_argument(u, p));
}

/// Revenue using the analytic continuation of the link; never throws.
inline double expected_revenue_ext(const DemandModel& model, double u, double p) {
    return p * model.link.value_ext(model.demand_argument(u, p));
}

/// Second derivative of r_u in p: -2 c a f'(v) + (c a)^2 p f''(v).
inline double revenue_curvature(const DemandModel& model, double u, double p) {
    const double v = model.demand_argument(u, p);
    const double s = model.price_slope();
    return -2.0 * s * model.link.derivative_ext(v) + s * s * p * model.link.second_derivative_ext(v);
}

struct OptimalPrice {
    double price = 0.0;
    bool interior = false;
};

/**
 * Maximizer of r_u over [price_min, price_max].
 *
 * Linear links use the stationary point u / (2 c alpha0), clamped. Other links
 * run golden-section search (r_u is unimodal but not necessarily concave).
 * `interior` is false when the maximizer sits on the price boundary.
 */
inline OptimalPrice unconstrained_optimal_price(const DemandModel& model, double u) {
    const double lo = model.price_min, hi = model.price_max;
    if (model.link.kind == LinkKind::Linear) {
        const double stationary = u / (2.0 * model.price_slope());
        if (stationary <= lo) return {lo, false};
        if (stationary >= hi) return {hi, false};
        return {stationary, true};
    }
    const auto best = golden_section_max(
        [&](double p) { return expected_revenue_ext(model, u, p); }, lo, hi, 1e-9);
    constexpr double edge = 1e-6;
    return {best.x, best.x - lo > edge && hi - best.x > edge};
}

/// Regularity constants of a model over a utility/price box.
struct ModelBounds {
    double B = 0.0;       ///< bound on |u|
    double B_tilde = 0.0; ///< bound on |u - c alpha0 p|
    double L_f = 0.0;     ///< bound on |f|, |f'|, |f''| over [-B_tilde, B_tilde]
    double sigma_r = 0.0; ///< minimum curvature -r_u''(p*(u)) over the utility mesh
    double M_r = 0.0;     ///< bound on |r_u''(p)|
    double sigma_u = 0.0; ///< inf of f' - (alpha0 p_max / 2)|f''|; may be <= 0

    struct RangeViolation {
        double u;
        double p;
        double demand;
    };
    /// Worst (u, p) at which f leaves [0, 1], if any.
    std::optional<RangeViolation> violation;
    std::size_t violation_count = 0;

    /// Largest fairness budget for which the linear optimal-policy structure is guaranteed.
    double linear_structure_limit() const {
        if (sigma_u <= 0.0 || M_r <= 0.0) return 0.0;
        return sigma_u / M_r;
    }
};

/// Minimum of f'(v) - (alpha0 p_max / 2)|f''(v)| over an n_grid mesh of [-B_tilde, B_tilde]
/// intersected with the link domain. Also stored into bounds.sigma_u.
inline double compute_sigma_u(const DemandModel& model, ModelBounds& bounds, std::size_t n_grid) {
    if (n_grid < 2) throw std::invalid_argument("compute_sigma_u: n_grid must be >= 2");
    const double lo = std::max(-bounds.B_tilde, model.link.domain_min());
    const double hi = std::max(lo, bounds.B_tilde);
    const double weight = 0.5 * model.alpha0 * model.price_max;
    double result = std::numeric_limits<double>::infinity();
    for (double v : linspace(lo, hi, n_grid)) {
        const double s = model.link.derivative_ext(v) - weight * std::abs(model.link.second_derivative_ext(v));
        result = std::min(result, s);
    }
    bounds.sigma_u = result;
    return result;
}

/**
 * Scan an n_mesh x n_mesh grid of the utility range and price interval to estimate
 * the regularity constants, and record where expected demand leaves [0, 1].
 */
inline ModelBounds validate_bounds(const DemandModel& model, Interval utility_range, std::size_t n_mesh = 201) {
    model.validate();
    if (utility_range.hi < utility_range.lo) throw std::invalid_argument("validate_bounds: empty utility range");
    if (n_mesh < 2) n_mesh = 2;

    ModelBounds b;
    b.B = std::max(std::abs(utility_range.lo), std::abs(utility_range.hi));
    const double s = model.price_slope();
    const double arg_lo = utility_range.lo - s * model.price_max;
    const double arg_hi = utility_range.hi - s * model.price_min;
    b.B_tilde = std::max({b.B, std::abs(arg_lo), std::abs(arg_hi)});

    for (double v : linspace(-b.B_tilde, b.B_tilde, 4 * n_mesh + 1)) {
        if (!model.link.in_domain(v)) continue;
        b.L_f = std::max({b.L_f, std::abs(model.link.value_ext(v)), std::abs(model.link.derivative_ext(v)),
                          std::abs(model.link.second_derivative_ext(v))});
    }

    const auto us = linspace(utility_range.lo, utility_range.hi, n_mesh);
    const auto ps = linspace(model.price_min, model.price_max, n_mesh);
    double worst = 0.0;
    b.sigma_r = std::numeric_limits<double>::infinity();
    for (double u : us) {
        for (double p : ps) {
            b.M_r = std::max(b.M_r, std::abs(revenue_curvature(model, u, p)));
            const double demand = model.link.value_ext(model.demand_argument(u, p));
            const double excess = demand < 0.0 ? -demand : (demand > 1.0 ? demand - 1.0 : 0.0);
            if (excess > 0.0) {
                ++b.violation_count;
                if (excess > worst) {
                    worst = excess;
                    b.violation = ModelBounds::RangeViolation{u, p, demand};
                }
            }
        }
        const auto opt = unconstrained_optimal_price(model, u);
        b.sigma_r = std::min(b.sigma_r, -revenue_curvature(model, u, opt.price));
    }
    compute_sigma_u(model, b, n_mesh);
    return b;
}

} // namespace fairprice
