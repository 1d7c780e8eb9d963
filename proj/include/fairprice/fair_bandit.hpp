#pragma once

#include "fairprice/demand_model.hpp"
#include "fairprice/environment.hpp"
#include "fairprice/estimation.hpp"
#include "fairprice/numerics.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fairprice {

enum class ParamMode { Computational, Theoretical };

/// Problem constants needed by the theoretical exploration cushion.
struct TheoryConstants {
    double M_r = 1.0;
    double diam_x = 1.0;
    double sigma_x = 1.0;
    double sigma_r = 1.0;
    double price_range = 1.0; ///< p_max - p_min
};

struct BanditParams {
    std::uint64_t T = 0;
    std::uint64_t T0 = 0; ///< ceil(T^{2/3}) experimentation periods
    std::uint64_t K = 1;  ///< ceil(T^{1/3}) arms
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double delta0 = 0.0;
    double delta0_tilde = 0.0; ///< max(0, delta0 - kappa1 / sqrt(T0))
    ParamMode mode = ParamMode::Computational;
};

/// Fairness budget left after the estimation cushion: max(0, delta0 - kappa1 / sqrt(T0)).
inline double cushioned_delta0(double delta0, double kappa1, std::uint64_t T0) {
    return std::max(0.0, delta0 - kappa1 / std::sqrt(static_cast<double>(T0)));
}

/**
 * Computational mode uses kappa1 = sqrt(ln(dT)), kappa2 = sqrt(ln T).
 * Theoretical mode uses kappa1 = 8 M_r diam sqrt(ln(dT)) / (min(sigma_x, (p_max - p_min)^2 / 4) sigma_r)
 * and kappa2 = 4 sqrt(ln T).
 */
inline BanditParams make_params(std::uint64_t T, std::size_t d, double delta0, ParamMode mode = ParamMode::Computational,
                                const TheoryConstants& constants = {}) {
    if (T < 8) throw std::invalid_argument("make_params: horizon T must be at least 8");
    if (!(delta0 > 0.0)) throw std::invalid_argument("make_params: delta0 must be positive");
    if (d == 0) throw std::invalid_argument("make_params: dimension must be positive");
    BanditParams p;
    p.T = T;
    p.T0 = std::min<std::uint64_t>(T, ceil_cbrt(T * T));
    p.K = std::max<std::uint64_t>(1, ceil_cbrt(T));
    p.delta0 = delta0;
    p.mode = mode;
    const double log_dt = std::log(static_cast<double>(d) * static_cast<double>(T));
    const double log_t = std::log(static_cast<double>(T));
    if (mode == ParamMode::Computational) {
        p.kappa1 = std::sqrt(log_dt);
        p.kappa2 = std::sqrt(log_t);
    } else {
        const double denom =
            std::min(constants.sigma_x, 0.25 * constants.price_range * constants.price_range) * constants.sigma_r;
        p.kappa1 = 8.0 * constants.M_r * constants.diam_x * std::sqrt(log_dt) / denom;
        p.kappa2 = 4.0 * std::sqrt(log_t);
    }
    p.delta0_tilde = cushioned_delta0(delta0, p.kappa1, p.T0);
    return p;
}

namespace detail {

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Bernoulli demand draw with success probability f(u - c alpha p), clamped to [0, 1].
inline double draw_demand(const DemandModel& model, double u, double p, Rng& rng) {
    const double q = std::clamp(model.link.value_ext(model.demand_argument(u, p)), 0.0, 1.0);
    return uniform01(rng) < q ? 1.0 : 0.0;
}

} // namespace detail

/// Phase one: T0 periods offering p_min or p_max with probability 1/2 each.
inline std::vector<Observation> run_experimentation(const Environment& env, const BanditParams& params, Rng& rng) {
    std::vector<Observation> data;
    data.reserve(params.T0);
    for (std::uint64_t t = 0; t < params.T0; ++t) {
        Observation obs;
        obs.x = sample_context(env.context_gen, rng);
        obs.p = detail::uniform01(rng) < 0.5 ? env.model.price_min : env.model.price_max;
        obs.y = detail::draw_demand(env.model, env.model.baseline_utility(obs.x), obs.p, rng);
        data.push_back(std::move(obs));
    }
    return data;
}

/// Upper-confidence-bound state over K starting prices.
struct UcbState {
    std::vector<double> arms;
    std::vector<double> r;
    std::vector<std::uint64_t> n;
    std::vector<double> theta_hat;
    double delta0_tilde = 0.0;
    Interval arm_interval;
    std::string diagnostic;
};

/**
 * Arms are K evenly spaced starting prices on
 * [p_min - d~ max_t x_t'theta_hat, p_max - d~ min_t x_t'theta_hat], endpoints included.
 * An inverted interval falls back to [p_min, p_max].
 */
inline UcbState init_ucb(const ModelEstimate& estimate, const std::vector<Observation>& data,
                         const BanditParams& params, Interval prices) {
    UcbState s;
    s.theta_hat = estimate.theta_hat;
    s.delta0_tilde = params.delta0_tilde;
    double umax = -std::numeric_limits<double>::infinity(), umin = std::numeric_limits<double>::infinity();
    for (const auto& obs : data) {
        const double u = dot(obs.x, s.theta_hat);
        umax = std::max(umax, u);
        umin = std::min(umin, u);
    }
    if (data.empty()) umax = umin = 0.0;
    s.arm_interval = {prices.lo - s.delta0_tilde * umax, prices.hi - s.delta0_tilde * umin};
    if (s.arm_interval.lo > s.arm_interval.hi) {
        s.diagnostic = "starting-price interval inverted; using the price interval";
        s.arm_interval = prices;
    }
    s.arms = linspace(s.arm_interval.lo, s.arm_interval.hi, static_cast<std::size_t>(params.K));
    s.r.assign(s.arms.size(), 0.0);
    s.n.assign(s.arms.size(), 0);
    return s;
}

/// Smallest unpulled arm if any, else argmax r/n + kappa2/sqrt(n) with ties to the smaller index.
inline std::size_t select_arm(const UcbState& state, double kappa2) {
    for (std::size_t k = 0; k < state.n.size(); ++k)
        if (state.n[k] == 0) return k;
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < state.n.size(); ++k) {
        const double n = static_cast<double>(state.n[k]);
        const double score = state.r[k] / n + kappa2 / std::sqrt(n);
        if (score > best_score) {
            best_score = score;
            best = k;
        }
    }
    return best;
}

/// trim(pi_arm + d~ x'theta_hat) into the price interval.
inline double implement_price(const UcbState& state, std::size_t arm, std::span<const double> x, Interval prices) {
    return trim(state.arms.at(arm) + state.delta0_tilde * dot(x, state.theta_hat), prices.lo, prices.hi);
}

inline void update_state(UcbState& state, std::size_t arm, double p, double y) {
    state.r.at(arm) += y * p;
    state.n.at(arm) += 1;
}

struct PeriodRecord {
    std::uint64_t t = 0; ///< 1-based period
    std::vector<double> x;
    double price = 0.0;
    double y = 0.0;
    int arm = -1; ///< -1 during experimentation
    double instant_regret = 0.0;
    double cum_regret = 0.0;
};

struct RegretTrace {
    BanditParams params;
    std::vector<PeriodRecord> records;
    double cumulative_regret = 0.0;
    /// Cumulative expected revenue of the benchmark policy at the realized contexts.
    double benchmark_revenue = 0.0;
    /// Cumulative expected revenue of the offered prices.
    double expected_revenue = 0.0;
    std::uint64_t fairness_violations = 0;
    /// Utility-scale slope d~ <theta_hat, theta0> / |theta0|^2 of the phase-two policies.
    double utility_slope = 0.0;
    /// Size d~ |theta_hat_perp| of the component of the slope orthogonal to theta0.
    double orthogonal_leak = 0.0;
    double theta_err = 0.0;
    ModelEstimate estimate;
    UcbState ucb;
    std::vector<std::string> diagnostics;

    double relative_regret() const { return benchmark_revenue > 0.0 ? cumulative_regret / benchmark_revenue : 0.0; }
};

struct RunOptions {
    bool keep_records = true;
};

/**
 * Runs both phases for T periods. Instant regret is r(u, benchmark(u)) - r(u, p_t) at
 * the realized utility u = x'theta0, using expected rather than realized demand.
 */
inline RegretTrace run_bandit(const Environment& env, const FairBenchmark& benchmark, const BanditParams& params,
                              Rng& rng, const RunOptions& options = {}) {
    const DemandModel& model = env.model;
    const Interval prices = model.price_interval();
    RegretTrace trace;
    trace.params = params;
    if (options.keep_records) trace.records.reserve(params.T);

    auto record = [&](std::uint64_t t, std::vector<double> x, double u, double p, double y, int arm) {
        const double best = expected_revenue_ext(model, u, benchmark.policy(u));
        const double got = expected_revenue_ext(model, u, p);
        const double regret = best - got;
        trace.cumulative_regret += regret;
        trace.benchmark_revenue += best;
        trace.expected_revenue += got;
        if (options.keep_records)
            trace.records.push_back({t, std::move(x), p, y, arm, regret, trace.cumulative_regret});
    };

    const auto data = run_experimentation(env, params, rng);
    for (std::uint64_t t = 0; t < data.size(); ++t)
        record(t + 1, data[t].x, model.baseline_utility(data[t].x), data[t].p, data[t].y, -1);

    const LikelihoodSpec spec{model.link.kind, model.price_coeff};
    trace.estimate = mle_fit(spec, data);
    if (!trace.estimate.converged) trace.diagnostics.push_back("mle: " + trace.estimate.diagnostic);
    trace.ucb = init_ucb(trace.estimate, data, params, prices);
    if (!trace.ucb.diagnostic.empty()) trace.diagnostics.push_back("ucb: " + trace.ucb.diagnostic);
    if (params.delta0_tilde == 0.0) trace.diagnostics.push_back("fairness cushion exhausted: non-personalized pricing");

    double theta_sq = 0.0, proj = 0.0, err_sq = 0.0;
    for (std::size_t i = 0; i < model.theta0.size(); ++i) {
        theta_sq += model.theta0[i] * model.theta0[i];
        proj += model.theta0[i] * trace.ucb.theta_hat[i];
        const double e = trace.ucb.theta_hat[i] - model.theta0[i];
        err_sq += e * e;
    }
    trace.theta_err = std::sqrt(err_sq);
    if (theta_sq > 0.0) {
        const double lambda = proj / theta_sq;
        double perp_sq = 0.0;
        for (std::size_t i = 0; i < model.theta0.size(); ++i) {
            const double r = trace.ucb.theta_hat[i] - lambda * model.theta0[i];
            perp_sq += r * r;
        }
        trace.utility_slope = params.delta0_tilde * lambda;
        trace.orthogonal_leak = params.delta0_tilde * std::sqrt(perp_sq);
    }
    const bool unfair = std::abs(trace.utility_slope) > params.delta0 + 1e-12;

    for (std::uint64_t t = params.T0; t < params.T; ++t) {
        auto x = sample_context(env.context_gen, rng);
        const std::size_t arm = select_arm(trace.ucb, params.kappa2);
        const double p = implement_price(trace.ucb, arm, x, prices);
        const double u = model.baseline_utility(x);
        const double y = detail::draw_demand(model, u, p, rng);
        update_state(trace.ucb, arm, p, y);
        if (unfair) ++trace.fairness_violations;
        record(t + 1, std::move(x), u, p, y, static_cast<int>(arm));
    }
    return trace;
}

/// Convenience overload computing the benchmark from the environment.
inline RegretTrace run_bandit(const Environment& env, const BanditParams& params, Rng& rng,
                              const RunOptions& options = {}) {
    return run_bandit(env, compute_benchmark(env, params.delta0), params, rng, options);
}

} // namespace fairprice
