// Acceptance checks; prints one PASS/FAIL line per criterion.
#include "fairprice/fairprice.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

using namespace fairprice;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool ok = true;
    std::string detail;
};

DemandModel make_model(LinkKind kind, double alpha0, double pmin, double pmax) {
    DemandModel m;
    m.link.kind = kind;
    m.theta0 = {1.0};
    m.alpha0 = alpha0;
    m.price_min = pmin;
    m.price_max = pmax;
    return m;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Outcome c1_closed_form() {
    Outcome o;
    const double v = cost_of_fairness_linear(1.0, 0.5, 1.0, 2.0);
    o.ok = v == 0.875;
    for (double d : {1.0, 1.5, 10.0}) o.ok = o.ok && cost_of_fairness_linear(1.0, d, 1.0, 2.0) == 1.0;
    o.detail = fmt("rho(0.5)=%.17g", v);
    return o;
}

Outcome c2_numeric_vs_closed() {
    Outcome o;
    const auto m = make_model(LinkKind::Linear, 1.0, 0.0, 2.0);
    const double eps = 0.01;
    const auto dist = UtilityDistribution::uniform(0.0, 2.0);
    const auto grid = discretize(dist, 2.0, eps);
    const auto mom = dist.moments();
    const double r_inf = unconstrained_revenue(m, grid);
    const auto bounds = validate_bounds(m, {0.0, 2.0});
    double worst = 0.0;
    for (int i = 1; i <= 9; ++i) {
        const double delta0 = i / 10.0;
        const double gap = std::abs(cost_of_fairness_numeric(m, grid, delta0, eps) -
                                    cost_of_fairness_linear(1.0, delta0, mom.mu, mom.nu_sq));
        const double bound = 8 * bounds.L_f * delta0 * eps / r_inf;
        worst = std::max(worst, gap / bound);
        o.ok = o.ok && gap <= bound;
    }
    o.detail = fmt("max gap/bound=%.3f", worst);
    return o;
}

Outcome c3_dp_vs_brute_force() {
    Outcome o;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> mu_dist(1, 7), mp_dist(1, 5), link_dist(0, 2);
    double worst = 0.0;
    int index_mismatch = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const double pmin = unit(rng), pmax = pmin + 0.2 + 2.0 * unit(rng);
        const auto m = make_model(static_cast<LinkKind>(link_dist(rng)), 0.2 + 1.5 * unit(rng), pmin, pmax);
        const int mu = mu_dist(rng), mp = mp_dist(rng);
        UtilityGrid g;
        g.eps = 0.05 + 0.5 * unit(rng);
        const double start = 3.0 * unit(rng);
        for (int k = 0; k < mu; ++k) {
            g.points.push_back(start + g.eps * k);
            g.weights.push_back(unit(rng));
        }
        const double total = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
        for (auto& w : g.weights) w /= total;
        const double delta0 = (pmax - pmin) / (mp * g.eps) * (1.0 + 1e-3 * unit(rng));
        const auto sol = solve_dp(m, g, delta0, g.eps);
        if (sol.price_count() > 5) {
            o.ok = false;
            continue;
        }
        const auto brute = brute_force_solve(m, g, sol.price_grid);
        const double gap = std::abs(sol.objective - brute.objective);
        worst = std::max(worst, gap);
        o.ok = o.ok && gap <= 1e-12;
        index_mismatch += sol.j_star != brute.j_star;
    }
    o.detail = fmt("max |dp-brute|=%.3g, index mismatches=%.0f", worst, index_mismatch);
    return o;
}

Outcome c4_linear_structure() {
    Outcome o;
    const auto m = make_model(LinkKind::Linear, 1.0, 0.0, 2.0);
    const double eps = 0.01;
    const auto grid = discretize(UtilityDistribution::uniform(0.0, 2.0), 2.0, eps);
    const auto [first, last] = grid.support();

    // delta0 = 0.5: the fitted slope over the support, and the pointwise gap to the linear optimum
    const double delta0 = 0.5, step = delta0 * eps;
    const auto sol = solve_dp(m, grid, delta0, eps);
    const auto policy = build_policy(sol, grid, delta0);
    const double span_u = grid.points[last - 1] - grid.points[first];
    const double slope = (policy.prices[last - 1] - policy.prices[first]) / span_u;
    const bool slope_ok = std::abs(slope - delta0) <= step / span_u + 1e-12;
    const auto lin = linear_optimal_policy(m, grid, delta0);
    double worst_lin = 0.0;
    for (std::size_t k = first; k < last; ++k)
        worst_lin = std::max(worst_lin, std::abs(policy.prices[k] - lin.policy(grid.points[k])) / step);

    // delta0 = 2 > 1/alpha: the constraint is slack and the DP tracks p*(u) = u / (2 c alpha)
    const double big = 2.0, big_step = big * eps;
    const auto sol2 = solve_dp(m, grid, big, eps);
    double worst_star = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        const double p_star = unconstrained_optimal_price(m, grid.points[k]).price;
        worst_star = std::max(worst_star, std::abs(sol2.price_grid[sol2.j_star[k]] - p_star) / big_step);
    }
    o.ok = slope_ok && worst_lin <= 2.0 && worst_star <= 2.0;
    o.detail = fmt("slope=%.5f, max gap to linear=%.2f steps, max gap to p*=%.2f steps", slope, worst_lin, worst_star);
    return o;
}

Outcome c5_rho_shape() {
    Outcome o;
    for (double alpha : {0.5, 1.0, 2.0})
        for (double ratio : {0.25, 0.5, 0.9}) {
            std::vector<double> rho;
            const int n = 200;
            for (int i = 1; i < n; ++i) rho.push_back(cost_of_fairness_linear(alpha, i / (alpha * n), 1.0, 1.0 / ratio));
            for (std::size_t i = 1; i < rho.size(); ++i) o.ok = o.ok && rho[i] - rho[i - 1] >= 0.0;
            for (std::size_t i = 2; i < rho.size(); ++i) o.ok = o.ok && rho[i] - 2 * rho[i - 1] + rho[i - 2] <= 1e-14;
        }
    o.detail = "3 alphas x 3 moment ratios";
    return o;
}

Outcome c6_mle_rate() {
    Outcome o;
    Eigen::VectorXd beta0(2);
    beta0 << 1.0, 1.0;
    std::vector<double> small(20), large(20);
    parallel_for(20, [&](std::size_t s) {
        Rng rng(100 + s);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<Observation> data(40'000);
        for (auto& ob : data) {
            ob.x = {unit(rng)};
            ob.p = unit(rng) < 0.5 ? 0.0 : 2.0;
            ob.y = unit(rng) < 1.0 / (1.0 + std::exp(-(ob.x[0] - 0.5 * ob.p))) ? 1.0 : 0.0;
        }
        const LikelihoodSpec spec{LinkKind::Logistic};
        const std::vector<Observation> head(data.begin(), data.begin() + 10'000);
        small[s] = (mle_fit(spec, head).beta() - beta0).norm();
        large[s] = (mle_fit(spec, data).beta() - beta0).norm();
    });
    const double a = median(small), b = median(large);
    o.ok = b <= 0.6 * a;
    o.detail = fmt("median err n=1e4: %.4f, n=4e4: %.4f, ratio %.3f", a, b, b / a);
    return o;
}

Outcome c7_linear_fairness() {
    Outcome o;
    const auto env = standard_environment(LinkKind::Linear, 3);
    const auto sweep = regret_sweep(env, {10'000}, 20, 7, 0.3);
    int clean = 0;
    for (auto v : sweep.fairness_violations[0]) clean += v == 0;
    o.ok = clean >= 19;
    o.detail = fmt("seeds without violations: %.0f/20", clean);
    return o;
}

Outcome c8_regret_rate() {
    Outcome o;
    const auto env = standard_environment(LinkKind::Logistic, 3);
    std::vector<std::uint64_t> Ts;
    for (int e = 10; e <= 17; ++e) Ts.push_back(std::uint64_t{1} << e);
    const auto sweep = regret_sweep(env, Ts, 20, 1, 0.3);
    std::vector<std::pair<double, double>> pts;
    bool decreasing = true;
    for (std::size_t i = 0; i < sweep.table.rows.size(); ++i) {
        pts.emplace_back(sweep.table.rows[i][0], sweep.table.rows[i][1]);
        if (i > 0) decreasing = decreasing && pts[i].second < pts[i - 1].second;
    }
    const double slope = loglog_slope(pts);
    o.ok = decreasing && slope >= -0.45 && slope <= -0.10;
    o.detail = fmt("slope=%.4f, strictly decreasing=%.0f", slope, decreasing);
    return o;
}

Outcome c9_properties() {
    Outcome o;
    std::ostringstream why;
    // every produced policy is fair
    for (auto kind : {LinkKind::Linear, LinkKind::Logistic, LinkKind::Exponential}) {
        const auto m = make_model(kind, 1.0, 0.0, kind == LinkKind::Linear ? 2.0 : 4.0);
        for (const auto& dist : {UtilityDistribution::uniform(0.0, 2.0), UtilityDistribution::normal(1.0, 0.5, 2.5),
                                 UtilityDistribution::student_t3(1.0, 0.5, 2.5)}) {
            const double B = std::min(dist.clip_bound(), 2.5);
            for (double delta0 : {0.1, 0.3, 0.7}) {
                const auto grid = discretize(dist, B, 0.02);
                const auto policy = build_policy(solve_dp(m, grid, delta0, 0.02), grid, delta0);
                if (!check_fairness(policy, delta0, 1e-9)) {
                    o.ok = false;
                    why << " unfair " << to_string(kind);
                }
                double total = 0.0;
                for (double w : grid.weights) total += w;
                if (std::abs(total - 1.0) > 1e-9) {
                    o.ok = false;
                    why << " gamma sum";
                }
            }
        }
    }
    // link derivatives against central differences
    const double h = 1e-4;
    for (auto kind : {LinkKind::Linear, LinkKind::Logistic, LinkKind::Exponential}) {
        const Link link{kind};
        for (double u = 0.05; u < 3.0; u += 0.1) {
            const double d1 = (link.value(u + h) - link.value(u - h)) / (2 * h);
            const double d2 = (link.value(u + h) - 2 * link.value(u) + link.value(u - h)) / (h * h);
            if (std::abs(d1 - link.derivative(u)) > 10 * h * h ||
                std::abs(d2 - link.second_derivative(u)) > 1e-5) {
                o.ok = false;
                why << " fd " << to_string(kind);
            }
        }
    }
    // fixed seeds reproduce byte-identical traces
    const auto env = standard_environment(LinkKind::Logistic, 3);
    const auto params = make_params(4000, 3, 0.3);
    Rng a(5), b(5);
    if (to_csv(trace_table(run_bandit(env, params, a))) != to_csv(trace_table(run_bandit(env, params, b)))) {
        o.ok = false;
        why << " trace differs";
    }
    o.detail = o.ok ? "fairness, derivatives, weights, determinism" : why.str();
    return o;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double budget_s;
    };
    const std::vector<Criterion> criteria{
        {"closed-form cost of fairness", c1_closed_form, 1.0},
        {"numeric cost of fairness within budget", c2_numeric_vs_closed, 30.0},
        {"DP matches brute force", c3_dp_vs_brute_force, 10.0},
        {"linear-demand structure", c4_linear_structure, 5.0},
        {"closed-form rho increasing and concave", c5_rho_shape, 1.0},
        {"MLE error shrinks with sample size", c6_mle_rate, 60.0},
        {"fair bandit respects fairness", c7_linear_fairness, 60.0},
        {"relative regret rate", c8_regret_rate, 1200.0},
        {"properties", c9_properties, 0.0},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = Clock::now();
        Outcome out;
        try {
            out = criteria[i].run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (criteria[i].budget_s > 0.0 && secs > criteria[i].budget_s) {
            out.ok = false;
            out.detail += " (over time budget)";
        }
        failures += !out.ok;
        std::printf("%s %zu %s: %s [%.2fs]\n", out.ok ? "PASS" : "FAIL", i + 1, criteria[i].name, out.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
