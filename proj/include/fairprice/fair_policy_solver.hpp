#pragma once

#include "fairprice/demand_model.hpp"
#include "fairprice/errors.hpp"
#include "fairprice/numerics.hpp"
#include "fairprice/utility_distributions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fairprice {

/**
 * A delta0-Lipschitz map from baseline utility to price.
 *
 * Interpolated policies interpolate linearly between knots and extend the end
 * prices as constants. Linear policies evaluate trim(pi0 + slope * u) exactly;
 * their knots are samples of that rule kept for export and fairness checks.
 */
struct PiecewiseLinearPolicy {
    enum class Form { Interpolated, Linear };

    std::vector<double> knots;
    std::vector<double> prices;
    double delta0 = 0.0;
    Form form = Form::Interpolated;
    double pi0 = 0.0;
    double slope = 0.0;
    double price_min = -std::numeric_limits<double>::infinity();
    double price_max = std::numeric_limits<double>::infinity();

    double operator()(double u) const {
        if (form == Form::Linear) return trim(pi0 + slope * u, price_min, price_max);
        if (knots.empty()) throw std::logic_error("policy has no knots");
        if (u <= knots.front()) return prices.front();
        if (u >= knots.back()) return prices.back();
        const auto it = std::upper_bound(knots.begin(), knots.end(), u);
        const auto i = static_cast<std::size_t>(it - knots.begin()) - 1;
        const double w = (u - knots[i]) / (knots[i + 1] - knots[i]);
        return prices[i] + w * (prices[i + 1] - prices[i]);
    }

    static PiecewiseLinearPolicy linear(double pi0, double slope, double delta0, Interval prices,
                                        std::vector<double> knots) {
        PiecewiseLinearPolicy p;
        p.form = Form::Linear;
        p.pi0 = pi0;
        p.slope = slope;
        p.delta0 = delta0;
        p.price_min = prices.lo;
        p.price_max = prices.hi;
        p.knots = std::move(knots);
        p.prices.reserve(p.knots.size());
        for (double u : p.knots) p.prices.push_back(p(u));
        return p;
    }
};

/// Optimal discrete solution of the fairness-constrained price-index problem.
struct DpSolution {
    std::vector<std::size_t> j_star; ///< 0-based price index per utility cell
    std::vector<double> value_table; ///< V(k, j), row-major (cells x prices); empty for brute force
    double objective = 0.0;
    std::vector<double> price_grid;
    double price_step = 0.0;

    std::size_t price_count() const { return price_grid.size(); }
    double value(std::size_t k, std::size_t j) const { return value_table[k * price_grid.size() + j]; }
};

struct DpOptions {
    /// Upper bound on utility cells x price points.
    std::size_t max_cells = 10'000'000;
};

/// Number of price points, ceil((p_max - p_min) / (delta0 * eps)).
inline std::size_t price_grid_count(const DemandModel& model, double delta0, double eps) {
    const double ratio = (model.price_max - model.price_min) / (delta0 * eps);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio)));
}

/**
 * Price grid with step delta0 * eps whose cells of half-width delta0 * eps / 2
 * cover [p_min, p_max]. Points are cell centers; a center past p_max is pulled
 * back onto p_max, which only shortens the final step.
 */
inline std::vector<double> make_price_grid(const DemandModel& model, double delta0, double eps) {
    if (!(delta0 > 0.0)) throw std::invalid_argument("delta0 must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const std::size_t m = price_grid_count(model, delta0, eps);
    std::vector<double> grid(m);
    const double step = delta0 * eps;
    for (std::size_t j = 0; j < m; ++j)
        grid[j] = std::min(model.price_min + (static_cast<double>(j) + 0.5) * step, model.price_max);
    return grid;
}

namespace detail {

/// Forward Bellman recursion over cells with revenue(k, j) and weights gamma_k.
template <class Revenue>
DpSolution solve_dp_core(std::span<const double> gamma, std::vector<double> price_grid, Revenue&& revenue,
                         const DpOptions& options) {
    const std::size_t mu = gamma.size();
    const std::size_t mp = price_grid.size();
    if (mu == 0 || mp == 0) throw std::invalid_argument("solve_dp: empty grid");
    if (mp > options.max_cells / mu)
        throw ResourceError("solve_dp: " + std::to_string(mu) + " x " + std::to_string(mp) +
                            " cells exceed the cap of " + std::to_string(options.max_cells) +
                            "; use a larger eps");

    DpSolution sol;
    sol.price_grid = std::move(price_grid);
    sol.value_table.assign(mu * mp, 0.0);
    double* v = sol.value_table.data();
    for (std::size_t j = 0; j < mp; ++j) v[j] = gamma[0] * revenue(0, j);
    for (std::size_t k = 1; k < mu; ++k) {
        const double* prev = v + (k - 1) * mp;
        double* cur = v + k * mp;
        for (std::size_t j = 0; j < mp; ++j) {
            double best = j > 0 ? prev[j - 1] : prev[j];
            if (prev[j] > best) best = prev[j];
            if (j + 1 < mp && prev[j + 1] > best) best = prev[j + 1];
            cur[j] = gamma[k] * revenue(k, j) + best;
        }
    }

    sol.j_star.assign(mu, 0);
    const double* last = v + (mu - 1) * mp;
    std::size_t jb = 0;
    for (std::size_t j = 1; j < mp; ++j)
        if (last[j] > last[jb]) jb = j;
    sol.j_star[mu - 1] = jb;
    sol.objective = last[jb];
    for (std::size_t k = mu - 1; k-- > 0;) {
        const double* row = v + k * mp;
        const std::size_t next = sol.j_star[k + 1];
        std::size_t pick = next > 0 ? next - 1 : next;
        const std::size_t hi = std::min(next + 1, mp - 1);
        for (std::size_t j = pick + 1; j <= hi; ++j)
            if (row[j] > row[pick]) pick = j;
        sol.j_star[k] = pick;
    }
    return sol;
}

} // namespace detail

/**
 * Exact optimum of the discretized fair pricing problem: choose one price index
 * per utility cell, adjacent cells differing by at most one index, to maximize
 * sum_k gamma_k r_{u_k}(p_{j_k}). Ties go to the smaller price index.
 * Revenue uses the analytic continuation of the link, so infeasible prices are
 * penalized rather than rejected.
 */
inline DpSolution solve_dp(const DemandModel& model, const UtilityGrid& grid, double delta0, double eps,
                           const DpOptions& options = {}) {
    if (std::abs(eps - grid.eps) > 1e-12 * std::max(1.0, eps))
        throw std::invalid_argument("solve_dp: eps must match the utility grid resolution");
    const auto prices = make_price_grid(model, delta0, eps);
    auto sol = detail::solve_dp_core(
        grid.weights, prices,
        [&](std::size_t k, std::size_t j) { return expected_revenue_ext(model, grid.points[k], prices[j]); },
        options);
    sol.price_step = delta0 * eps;
    return sol;
}

/// Same recursion over an arbitrary revenue(k, j) callable, e.g. a precomputed table.
template <class Revenue>
DpSolution solve_dp_with(std::span<const double> gamma, std::vector<double> price_grid, Revenue&& revenue,
                         const DpOptions& options = {}) {
    return detail::solve_dp_core(gamma, std::move(price_grid), std::forward<Revenue>(revenue), options);
}

/**
 * Exhaustive enumeration of every feasible index chain; a test oracle for solve_dp.
 * Sums accumulate in cell order, the same arithmetic path as the recursion, and ties
 * resolve to the chain that is smallest when compared from the last cell backwards,
 * which is the chain the recursion's backtracking selects.
 */
template <class Revenue>
DpSolution brute_force_with(std::span<const double> gamma, std::vector<double> price_grid, Revenue&& revenue,
                            std::size_t max_chains = 1'000'000) {
    const std::size_t mu = gamma.size();
    const std::size_t mp = price_grid.size();
    if (mu == 0 || mp == 0) throw std::invalid_argument("brute_force_solve: empty grid");
    double chains = static_cast<double>(mp) * std::pow(3.0, static_cast<double>(mu - 1));
    if (chains > static_cast<double>(max_chains))
        throw ResourceError("brute_force_solve: instance too large for enumeration");

    std::vector<double> table(mu * mp);
    for (std::size_t k = 0; k < mu; ++k)
        for (std::size_t j = 0; j < mp; ++j) table[k * mp + j] = gamma[k] * revenue(k, j);

    DpSolution best;
    best.price_grid = std::move(price_grid);
    best.objective = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> chain(mu);
    auto later_is_smaller = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        for (std::size_t k = mu; k-- > 0;)
            if (a[k] != b[k]) return a[k] < b[k];
        return false;
    };
    std::function<void(std::size_t, double)> walk = [&](std::size_t k, double acc) {
        if (k == mu) {
            if (acc > best.objective || (acc == best.objective && later_is_smaller(chain, best.j_star))) {
                best.objective = acc;
                best.j_star = chain;
            }
            return;
        }
        const std::size_t lo = k == 0 ? 0 : (chain[k - 1] > 0 ? chain[k - 1] - 1 : 0);
        const std::size_t hi = k == 0 ? mp - 1 : std::min(chain[k - 1] + 1, mp - 1);
        for (std::size_t j = lo; j <= hi; ++j) {
            chain[k] = j;
            walk(k + 1, k == 0 ? table[j] : acc + table[k * mp + j]);
        }
    };
    walk(0, 0.0);
    return best;
}

inline DpSolution brute_force_solve(const DemandModel& model, const UtilityGrid& grid,
                                    const std::vector<double>& price_grid) {
    auto sol = brute_force_with(grid.weights, price_grid, [&](std::size_t k, std::size_t j) {
        return expected_revenue_ext(model, grid.points[k], price_grid[j]);
    });
    if (price_grid.size() > 1) sol.price_step = price_grid[1] - price_grid[0];
    return sol;
}

/// Interpolating policy through (u_k, p_{j*_k}).
inline PiecewiseLinearPolicy build_policy(const DpSolution& solution, const UtilityGrid& grid, double delta0) {
    if (solution.j_star.size() != grid.size()) throw std::invalid_argument("build_policy: grid/solution mismatch");
    PiecewiseLinearPolicy policy;
    policy.form = PiecewiseLinearPolicy::Form::Interpolated;
    policy.delta0 = delta0;
    policy.knots = grid.points;
    policy.prices.reserve(grid.size());
    for (std::size_t j : solution.j_star) policy.prices.push_back(solution.price_grid.at(j));
    if (!solution.price_grid.empty()) {
        policy.price_min = solution.price_grid.front();
        policy.price_max = solution.price_grid.back();
    }
    return policy;
}

/**
 * delta0-utility fairness of a policy: every knot-to-knot slope is at most delta0 + tol
 * in absolute value, which is necessary and sufficient for piecewise-linear maps.
 * Linear-form policies additionally need |slope| <= delta0 + tol.
 */
inline bool check_fairness(const PiecewiseLinearPolicy& policy, double delta0, double tol = 1e-9) {
    if (policy.form == PiecewiseLinearPolicy::Form::Linear && std::abs(policy.slope) > delta0 + tol) return false;
    for (std::size_t i = 0; i + 1 < policy.knots.size(); ++i) {
        const double du = policy.knots[i + 1] - policy.knots[i];
        const double dp = std::abs(policy.prices[i + 1] - policy.prices[i]);
        if (dp > (delta0 + tol) * du + 1e-12) return false;
    }
    return true;
}

/// sum_k gamma_k r_{u_k}(policy(u_k)); cells with zero weight are skipped.
inline double evaluate_policy_revenue(const PiecewiseLinearPolicy& policy, const DemandModel& model,
                                      const UtilityGrid& grid) {
    double total = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid.weights[k] <= 0.0) continue;
        total += grid.weights[k] * expected_revenue(model, grid.points[k], policy(grid.points[k]));
    }
    return total;
}

/// Expected revenue of pointwise revenue-maximizing prices, the fairness-free benchmark.
inline double unconstrained_revenue(const DemandModel& model, const UtilityGrid& grid) {
    double total = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid.weights[k] <= 0.0) continue;
        const double u = grid.points[k];
        total += grid.weights[k] * expected_revenue_ext(model, u, unconstrained_optimal_price(model, u).price);
    }
    return total;
}

/// Worst-case revenue loss of the discretized policy, 4 L_f delta0 eps.
inline double approximation_budget(double L_f, double delta0, double eps) { return 4.0 * L_f * delta0 * eps; }

struct LinearPolicyResult {
    PiecewiseLinearPolicy policy;
    /// False when delta0 exceeds sigma_u / M_r, where the linear form is not guaranteed optimal.
    bool structure_guaranteed = true;
    std::string warning;
};

/**
 * Best policy of the form trim(pi0 + delta0 u).
 *
 * Linear links use the closed form pi0 = mu (1 - 2 c a delta) / (2 c a) with the slope capped at
 * 1 / (2 c a), beyond which the unconstrained optimum is itself fair; with c = 0.5 this is
 * pi0 = (1 - a delta0) mu / a. Other links maximize grid revenue over pi0 in
 * [p_min - delta0 B, p_max + delta0 B] by golden-section search, trimming prices when evaluating.
 */
inline LinearPolicyResult linear_optimal_policy(const DemandModel& model, const UtilityGrid& grid, double delta0,
                                                std::optional<Moments> moments = std::nullopt,
                                                std::optional<ModelBounds> bounds = std::nullopt) {
    if (!(delta0 > 0.0)) throw std::invalid_argument("delta0 must be positive");
    LinearPolicyResult out;
    const Interval prices = model.price_interval();
    if (model.link.kind == LinkKind::Linear) {
        const Moments m = moments.value_or(grid.moments());
        const double s2 = 2.0 * model.price_slope();
        const double slope = std::min(delta0, 1.0 / s2);
        const double pi0 = m.mu * (1.0 - s2 * slope) / s2;
        out.policy = PiecewiseLinearPolicy::linear(pi0, slope, delta0, prices, grid.points);
        return out;
    }

    const auto [first, last] = grid.support();
    if (first >= last) throw std::invalid_argument("linear_optimal_policy: grid carries no probability");
    if (!bounds) bounds = validate_bounds(model, {grid.points[first], grid.points[last - 1]}, 101);
    double B = 0.0;
    for (std::size_t k = first; k < last; ++k) B = std::max(B, std::abs(grid.points[k]));

    auto objective = [&](double pi0) {
        double total = 0.0;
        for (std::size_t k = first; k < last; ++k) {
            const double u = grid.points[k];
            total += grid.weights[k] * expected_revenue_ext(model, u, trim(pi0 + delta0 * u, prices.lo, prices.hi));
        }
        return total;
    };
    const auto best = golden_section_max(objective, prices.lo - delta0 * B, prices.hi + delta0 * B, 1e-9);
    out.policy = PiecewiseLinearPolicy::linear(best.x, delta0, delta0, prices, grid.points);
    const double limit = bounds->linear_structure_limit();
    if (delta0 > limit) {
        out.structure_guaranteed = false;
        out.warning = "delta0 = " + std::to_string(delta0) + " exceeds sigma_u / M_r = " + std::to_string(limit) +
                      "; the linear form may not be optimal";
    }
    return out;
}

/// Closed-form cost of fairness for linear demand with the 0.5 price convention.
inline double cost_of_fairness_linear(double alpha0, double delta0, double mu_u, double nu_sq) {
    if (!(alpha0 > 0.0)) throw std::invalid_argument("alpha0 must be positive");
    if (!(nu_sq > 0.0)) throw DomainError("cost_of_fairness_linear: degenerate distribution (nu^2 = 0)");
    const double ad = alpha0 * delta0;
    if (ad >= 1.0) return 1.0;
    return ad * (2.0 - ad) + (1.0 - ad) * (1.0 - ad) * mu_u * mu_u / nu_sq;
}

struct FairnessCost {
    double rho = 0.0;
    double fair_revenue = 0.0;
    double unconstrained_revenue = 0.0;
};

/// R(delta0) from the dynamic program over R(+inf) from pointwise optimal prices on the same grid.
inline FairnessCost cost_of_fairness_detail(const DemandModel& model, const UtilityGrid& grid, double delta0,
                                            double eps, const DpOptions& options = {}) {
    FairnessCost out;
    out.fair_revenue = solve_dp(model, grid, delta0, eps, options).objective;
    out.unconstrained_revenue = unconstrained_revenue(model, grid);
    if (!(out.unconstrained_revenue > 0.0))
        throw DomainError("cost_of_fairness_numeric: unconstrained revenue is zero, ratio undefined");
    out.rho = out.fair_revenue / out.unconstrained_revenue;
    return out;
}

inline double cost_of_fairness_numeric(const DemandModel& model, const UtilityGrid& grid, double delta0, double eps,
                                       const DpOptions& options = {}) {
    return cost_of_fairness_detail(model, grid, delta0, eps, options).rho;
}

} // namespace fairprice
