#pragma once

#include "fairprice/demand_model.hpp"
#include "fairprice/fair_policy_solver.hpp"
#include "fairprice/utility_distributions.hpp"

#include <cstdint>
#include <optional>

namespace fairprice {

/// True demand model bound to the context stream that feeds it.
struct Environment {
    DemandModel model;
    ContextGenerator context_gen;
    /// Explicit utility distribution; when absent it is the empirical distribution implied by context_gen.
    std::optional<UtilityDistribution> utility_dist;
    std::uint64_t rng_seed = 1;

    void validate() const {
        model.validate();
        context_gen.validate();
        if (model.theta0.size() != context_gen.dim())
            throw ConfigError("environment: theta0 dimension differs from the context generator");
    }

    UtilityDistribution utility_distribution(std::size_t n_samples = 200'000) const {
        if (utility_dist) return *utility_dist;
        ContextGenerator gen = context_gen;
        gen.theta0 = model.theta0;
        return implied_utility_distribution(gen, n_samples, rng_seed ^ 0x5eedULL);
    }
};

/// Full-information optimal delta0-fair policy used as the regret benchmark.
struct FairBenchmark {
    PiecewiseLinearPolicy policy;
    bool linear_path = false;
    double expected_revenue = 0.0;
    ModelBounds bounds;
    UtilityGrid grid;
};

/**
 * Optimal fair policy for an environment: the linear form when it is known to be
 * optimal (linear demand, or delta0 <= sigma_u / M_r), otherwise the dynamic
 * program at resolution eps.
 */
inline FairBenchmark compute_benchmark(const Environment& env, double delta0, double eps = 1e-2) {
    env.validate();
    const UtilityDistribution dist = env.utility_distribution();
    double lo = 0.0, hi = 0.0;
    if (dist.kind() == DistKind::Empirical) {
        lo = dist.samples().front();
        hi = dist.samples().back();
    } else {
        const auto m = dist.moments();
        const double sd = std::sqrt(std::max(0.0, m.variance()));
        lo = std::max(-dist.clip_bound(), m.mu - 8.0 * sd);
        hi = std::min(dist.clip_bound(), m.mu + 8.0 * sd);
    }
    const double B = std::max({std::abs(lo), std::abs(hi), eps});

    FairBenchmark out;
    out.grid = discretize(dist, B, eps);
    out.bounds = validate_bounds(env.model, {lo, hi}, 101);
    const bool linear = env.model.link.kind == LinkKind::Linear || delta0 <= out.bounds.linear_structure_limit();
    if (linear) {
        std::optional<Moments> m;
        if (env.model.link.kind == LinkKind::Linear) m = dist.moments();
        out.policy = linear_optimal_policy(env.model, out.grid, delta0, m, out.bounds).policy;
        out.linear_path = true;
    } else {
        const auto sol = solve_dp(env.model, out.grid, delta0, eps);
        out.policy = build_policy(sol, out.grid, delta0);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < out.grid.size(); ++k)
        if (out.grid.weights[k] > 0.0)
            total += out.grid.weights[k] * expected_revenue_ext(env.model, out.grid.points[k], out.policy(out.grid.points[k]));
    out.expected_revenue = total;
    return out;
}

} // namespace fairprice
