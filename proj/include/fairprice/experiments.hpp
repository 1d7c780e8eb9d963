#pragma once

#include "fairprice/environment.hpp"
#include "fairprice/fair_bandit.hpp"
#include "fairprice/fair_policy_solver.hpp"
#include "fairprice/io.hpp"
#include "fairprice/numerics.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fairprice {

/// Worker count: FAIRPRICE_THREADS if set and positive, else the hardware concurrency.
inline std::size_t worker_count() {
    if (const char* env = std::getenv("FAIRPRICE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to worker_count() threads; rethrows the first failure.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Trial i runs with seed base ^ i.
inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t i) { return base ^ i; }

/**
 * Default environments: d i.i.d. uniform coordinates, theta0 = (1/d, ..., 1/d), alpha0 = 1,
 * price coefficient 0.5.
 *  - Linear: coordinates on [0.5, 1] and prices on [0, 1], so demand stays in [0, 1].
 *  - Logistic: coordinates on [0, 1] and prices on [0, 4], keeping optimal prices interior.
 */
inline Environment standard_environment(LinkKind link, std::size_t d, std::uint64_t seed = 1) {
    if (d == 0) throw ConfigError("dimension must be positive");
    Environment env;
    env.model.link.kind = link;
    env.model.theta0.assign(d, 1.0 / static_cast<double>(d));
    env.model.alpha0 = 1.0;
    env.model.price_coeff = 0.5;
    env.context_gen.theta0 = env.model.theta0;
    switch (link) {
    case LinkKind::Linear:
        env.model.price_min = 0.0;
        env.model.price_max = 1.0;
        env.context_gen.coords = {UtilityDistribution::uniform(0.5, 1.0)};
        break;
    case LinkKind::Logistic:
    case LinkKind::Exponential:
        env.model.price_min = 0.0;
        env.model.price_max = 4.0;
        env.context_gen.coords = {UtilityDistribution::uniform(0.0, 1.0)};
        break;
    }
    env.rng_seed = seed;
    env.validate();
    return env;
}

/// Config environment; {"standard": {"link": ..., "d": ...}} selects a default environment.
inline Environment load_environment(const json& config) {
    if (config.contains("standard")) {
        const auto& s = config.at("standard");
        try {
            return standard_environment(link_kind_from_string(s.at("link").get<std::string>()),
                                        get_or<std::size_t>(s, "d", 1), get_or<std::uint64_t>(config, "seed", 1));
        } catch (const json::exception& e) {
            throw ConfigError(std::string("standard: ") + e.what());
        }
    }
    return environment_from_json(config);
}

/// Constants for the theoretical exploration cushion, estimated from the environment.
inline TheoryConstants theory_constants(const Environment& env, const ModelBounds& bounds, std::size_t n = 20000) {
    TheoryConstants c;
    Rng rng(env.rng_seed ^ 0x7e0ULL);
    double max_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = sample_context(env.context_gen, rng);
        max_norm = std::max(max_norm, std::sqrt(dot(x, x)));
    }
    c.M_r = bounds.M_r;
    c.diam_x = 2.0 * max_norm;
    c.sigma_x = min_covariance_eigenvalue(env.context_gen, n, rng);
    c.sigma_r = bounds.sigma_r;
    c.price_range = env.model.price_max - env.model.price_min;
    return c;
}

/// Parses "start:stop:step" (inclusive, tolerant to rounding) or a comma list.
inline std::vector<double> parse_sweep(const std::string& spec) {
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::size_t pos = 0;
        while (true) {
            const auto next = spec.find(':', pos);
            parts.push_back(parse_number(spec.substr(pos, next - pos)));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
            throw ConfigError("sweep must be start:stop:step with step > 0 and stop >= start");
        const auto n = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
        // snap to 12 significant digits so 0.1:1.5:0.1 yields 0.3, not 0.30000000000000004
        for (std::size_t i = 0; i < n; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.12g", parts[0] + parts[2] * static_cast<double>(i));
            out.push_back(std::strtod(buf, nullptr));
        }
    } else {
        std::size_t pos = 0;
        while (pos <= spec.size()) {
            const auto next = spec.find(',', pos);
            const auto tok = spec.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
            if (!tok.empty()) out.push_back(parse_number(tok));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
    }
    if (out.empty()) throw ConfigError("empty sweep '" + spec + "'");
    return out;
}

/// Grid covering the bulk of a utility distribution at resolution eps.
inline UtilityGrid utility_grid_for(const UtilityDistribution& dist, double eps) {
    double lo, hi;
    if (dist.kind() == DistKind::Empirical) {
        lo = dist.samples().front();
        hi = dist.samples().back();
    } else {
        const auto m = dist.moments();
        const double sd = std::sqrt(std::max(0.0, m.variance()));
        lo = std::max(-dist.clip_bound(), m.mu - 8.0 * sd);
        hi = std::min(dist.clip_bound(), m.mu + 8.0 * sd);
    }
    return discretize(dist, std::max({std::abs(lo), std::abs(hi), eps}), eps);
}

/**
 * Cost of fairness over a delta0 sweep: the closed form for linear demand with the 0.5
 * price convention, the dynamic program otherwise. Rows are (delta0, rho).
 */
inline NumericTable rho_curve(const DemandModel& model, const UtilityDistribution& dist,
                              const std::vector<double>& delta0_list, double eps = 1e-2) {
    for (std::size_t i = 1; i < delta0_list.size(); ++i)
        if (!(delta0_list[i] > delta0_list[i - 1])) throw ConfigError("delta0 list must be increasing");
    NumericTable table{{"delta0", "rho"}, std::vector<std::vector<double>>(delta0_list.size())};
    const bool closed_form = model.link.kind == LinkKind::Linear && model.price_coeff == 0.5;
    const Moments m = dist.moments();
    const UtilityGrid grid = closed_form ? UtilityGrid{} : utility_grid_for(dist, eps);
    parallel_for(delta0_list.size(), [&](std::size_t i) {
        const double d0 = delta0_list[i];
        const double rho = closed_form ? cost_of_fairness_linear(model.alpha0, d0, m.mu, m.nu_sq)
                                       : cost_of_fairness_numeric(model, grid, d0, eps);
        table.rows[i] = {d0, rho};
    });
    return table;
}

struct SweepResult {
    NumericTable table; ///< T, mean_rel_regret, sd_rel_regret, n_trials
    /// relative_regret[i][trial] for T_list[i]
    std::vector<std::vector<double>> relative_regret;
    std::vector<std::vector<std::uint64_t>> fairness_violations;
};

/// Relative regret over a horizon sweep; trial i of every horizon uses seed base_seed ^ i.
inline SweepResult regret_sweep(const Environment& env, const std::vector<std::uint64_t>& T_list, std::size_t n_trials,
                                std::uint64_t base_seed, double delta0, ParamMode mode = ParamMode::Computational,
                                const TheoryConstants& constants = {}) {
    if (n_trials == 0) throw ConfigError("n_trials must be >= 1");
    for (std::size_t i = 1; i < T_list.size(); ++i)
        if (!(T_list[i] > T_list[i - 1])) throw ConfigError("T list must be increasing");
    const FairBenchmark benchmark = compute_benchmark(env, delta0);

    SweepResult out;
    out.table.header = {"T", "mean_rel_regret", "sd_rel_regret", "n_trials"};
    out.relative_regret.assign(T_list.size(), std::vector<double>(n_trials));
    out.fairness_violations.assign(T_list.size(), std::vector<std::uint64_t>(n_trials));
    const std::size_t jobs = T_list.size() * n_trials;
    parallel_for(jobs, [&](std::size_t job) {
        const std::size_t ti = job / n_trials, trial = job % n_trials;
        const auto params = make_params(T_list[ti], env.model.theta0.size(), delta0, mode, constants);
        Rng rng(trial_seed(base_seed, trial));
        const auto trace = run_bandit(env, benchmark, params, rng, RunOptions{false});
        out.relative_regret[ti][trial] = trace.relative_regret();
        out.fairness_violations[ti][trial] = trace.fairness_violations;
    });
    for (std::size_t ti = 0; ti < T_list.size(); ++ti) {
        const auto& v = out.relative_regret[ti];
        out.table.rows.push_back(
            {static_cast<double>(T_list[ti]), mean(v), stddev(v), static_cast<double>(n_trials)});
    }
    return out;
}

/// Least-squares slope of log2(rel_regret) against log2(T).
inline double loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("loglog_slope: need at least two points");
    std::vector<double> xs, ys;
    for (auto [t, r] : points) {
        if (!(t > 0.0) || !(r > 0.0)) throw DomainError("loglog_slope: values must be positive");
        xs.push_back(std::log2(t));
        ys.push_back(std::log2(r));
    }
    const double mx = mean(xs), my = mean(ys);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) throw DomainError("loglog_slope: all horizons are equal");
    return sxy / sxx;
}

} // namespace fairprice
