#include "fairprice/experiments.hpp"
#include "fairprice/fair_bandit.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace fairprice;

TEST(Params, HorizonArithmetic) {
    const auto p = make_params(1000, 3, 0.3);
    EXPECT_EQ(p.T0, 100u);
    EXPECT_EQ(p.K, 10u);
    EXPECT_DOUBLE_EQ(p.kappa1, std::sqrt(std::log(3000.0)));
    EXPECT_DOUBLE_EQ(p.kappa2, std::sqrt(std::log(1000.0)));
    EXPECT_LE(p.T0, p.T);
    EXPECT_GE(p.delta0_tilde, 0.0);
    EXPECT_LE(p.delta0_tilde, p.delta0);
}

TEST(Params, Cushion) {
    EXPECT_NEAR(cushioned_delta0(0.3, 0.2 * std::sqrt(100.0), 100), 0.1, 1e-15);
    EXPECT_EQ(cushioned_delta0(0.3, 10.0, 100), 0.0);
}

TEST(Params, TheoreticalMode) {
    TheoryConstants c{2.0, 1.5, 0.1, 0.5, 1.0};
    const auto p = make_params(4096, 2, 0.3, ParamMode::Theoretical, c);
    const double expect = 8 * 2.0 * 1.5 * std::sqrt(std::log(2 * 4096.0)) / (std::min(0.1, 0.25) * 0.5);
    EXPECT_NEAR(p.kappa1, expect, 1e-12);
    EXPECT_NEAR(p.kappa2, 4 * std::sqrt(std::log(4096.0)), 1e-12);
    EXPECT_EQ(p.delta0_tilde, 0.0);
}

TEST(Params, RejectsBadInput) {
    EXPECT_THROW(make_params(7, 1, 0.3), std::invalid_argument);
    EXPECT_THROW(make_params(100, 1, 0.0), std::invalid_argument);
    EXPECT_THROW(make_params(100, 0, 0.3), std::invalid_argument);
}

TEST(Experimentation, TwoPricesHalfEach) {
    const auto env = standard_environment(LinkKind::Logistic, 2);
    auto params = make_params(1000, 2, 0.3);
    params.T0 = 10'000;
    Rng rng(3);
    const auto data = run_experimentation(env, params, rng);
    ASSERT_EQ(data.size(), 10'000u);
    std::size_t high = 0;
    for (const auto& o : data) {
        EXPECT_TRUE(o.p == env.model.price_min || o.p == env.model.price_max);
        EXPECT_TRUE(o.y == 0.0 || o.y == 1.0);
        if (o.p == env.model.price_max) ++high;
    }
    EXPECT_NEAR(high / 10'000.0, 0.5, 0.02);
}

TEST(Ucb, ZeroCushionUsesPriceInterval) {
    ModelEstimate est;
    est.theta_hat = {1.0};
    std::vector<Observation> data{{{0.2}, 0, 0}, {{0.9}, 1, 1}};
    BanditParams params;
    params.K = 4;
    params.delta0_tilde = 0.0;
    const auto s = init_ucb(est, data, params, {0.0, 1.0});
    EXPECT_DOUBLE_EQ(s.arm_interval.lo, 0.0);
    EXPECT_DOUBLE_EQ(s.arm_interval.hi, 1.0);
    EXPECT_EQ(s.arms.size(), 4u);
}

TEST(Ucb, IntervalFromContexts) {
    ModelEstimate est;
    est.theta_hat = {0.5, 0.5};
    std::vector<Observation> data{{{0.0, 0.0}, 0, 0}, {{1.0, 1.0}, 1, 1}, {{0.4, 0.2}, 1, 0}};
    BanditParams params;
    params.K = 3;
    params.delta0_tilde = 0.1;
    const auto s = init_ucb(est, data, params, {0.0, 1.0});
    EXPECT_DOUBLE_EQ(s.arm_interval.lo, -0.1);
    EXPECT_DOUBLE_EQ(s.arm_interval.hi, 1.0);
}

TEST(Ucb, ArmsEvenlySpaced) {
    ModelEstimate est;
    est.theta_hat = {0.0};
    BanditParams params;
    params.K = 3;
    const auto s = init_ucb(est, {{{1.0}, 0, 0}}, params, {0.0, 1.0});
    EXPECT_EQ(s.arms, (std::vector<double>{0.0, 0.5, 1.0}));
    params.K = 1;
    EXPECT_EQ(init_ucb(est, {{{1.0}, 0, 0}}, params, {0.0, 1.0}).arms, std::vector<double>{0.5});
}

TEST(Ucb, IntervalWidensWithEstimatedUtilitySpread) {
    ModelEstimate est;
    est.theta_hat = {10.0};
    BanditParams params;
    params.K = 2;
    params.delta0_tilde = 0.5;
    const auto s = init_ucb(est, {{{0.0}, 0, 0}, {{1.0}, 0, 0}}, params, {0.0, 1.0});
    EXPECT_DOUBLE_EQ(s.arm_interval.lo, -5.0);
    EXPECT_DOUBLE_EQ(s.arm_interval.hi, 1.0);
    EXPECT_TRUE(s.diagnostic.empty());
}

TEST(Ucb, SelectArm) {
    UcbState s;
    s.n = {3, 0, 5};
    s.r = {1, 0, 1};
    EXPECT_EQ(select_arm(s, 1.0), 1u);
    s.n = {2, 1};
    s.r = {1, 0};
    EXPECT_EQ(select_arm(s, 0.0), 0u);
    s.n = {100, 1};
    s.r = {50, 0.4};
    EXPECT_EQ(select_arm(s, 4.0), 1u);
    s.n = {4, 4};
    s.r = {2, 2};
    EXPECT_EQ(select_arm(s, 1.0), 0u); // tie to the smaller index
}

TEST(Ucb, ImplementPriceTrims) {
    UcbState s;
    s.theta_hat = {1.0};
    s.delta0_tilde = 0.5;
    s.arms = {1.0, -0.7, 0.12};
    const std::vector<double> x{1.0};
    EXPECT_DOUBLE_EQ(implement_price(s, 0, x, {0.0, 1.0}), 1.0);
    EXPECT_DOUBLE_EQ(implement_price(s, 1, x, {0.0, 1.0}), 0.0);
    EXPECT_DOUBLE_EQ(implement_price(s, 2, x, {0.0, 1.0}), 0.62);
}

TEST(Ucb, UpdateState) {
    UcbState s;
    s.r = {0.0};
    s.n = {0};
    update_state(s, 0, 0.5, 0.0);
    EXPECT_EQ(s.r[0], 0.0);
    EXPECT_EQ(s.n[0], 1u);
    update_state(s, 0, 0.5, 1.0);
    EXPECT_EQ(s.r[0], 0.5);
    update_state(s, 0, 0.3, 1.0);
    update_state(s, 0, 0.2, 1.0);
    EXPECT_DOUBLE_EQ(s.r[0], 1.0);
    EXPECT_EQ(s.n[0], 4u);
}

TEST(RunBandit, DeterministicForFixedSeed) {
    const auto env = standard_environment(LinkKind::Logistic, 3);
    const auto bench = compute_benchmark(env, 0.3);
    const auto params = make_params(2000, 3, 0.3);
    Rng a(77), b(77);
    const auto ta = run_bandit(env, bench, params, a);
    const auto tb = run_bandit(env, bench, params, b);
    ASSERT_EQ(ta.records.size(), tb.records.size());
    for (std::size_t i = 0; i < ta.records.size(); ++i) {
        EXPECT_EQ(ta.records[i].price, tb.records[i].price);
        EXPECT_EQ(ta.records[i].y, tb.records[i].y);
        EXPECT_EQ(ta.records[i].cum_regret, tb.records[i].cum_regret);
    }
    EXPECT_EQ(ta.cumulative_regret, tb.cumulative_regret);
}

TEST(RunBandit, TraceInvariants) {
    for (auto link : {LinkKind::Linear, LinkKind::Logistic}) {
        const auto env = standard_environment(link, 3);
        const auto params = make_params(3000, 3, 0.3);
        Rng rng(5);
        const auto trace = run_bandit(env, params, rng);
        ASSERT_EQ(trace.records.size(), params.T);
        double sum = 0.0, phase2_revenue = 0.0;
        for (const auto& r : trace.records) {
            EXPECT_GE(r.price, env.model.price_min);
            EXPECT_LE(r.price, env.model.price_max);
            sum += r.instant_regret;
            if (r.arm >= 0) phase2_revenue += r.price * r.y;
            EXPECT_EQ(r.arm < 0, r.t <= params.T0);
        }
        EXPECT_NEAR(sum, trace.cumulative_regret, 1e-9);
        const auto& ucb = trace.ucb;
        EXPECT_EQ(std::accumulate(ucb.n.begin(), ucb.n.end(), std::uint64_t{0}), params.T - params.T0);
        EXPECT_NEAR(std::accumulate(ucb.r.begin(), ucb.r.end(), 0.0), phase2_revenue, 1e-9);
        for (std::size_t k = 0; k < ucb.r.size(); ++k) {
            EXPECT_GE(ucb.r[k], 0.0);
            EXPECT_LE(ucb.r[k], ucb.n[k] * env.model.price_max + 1e-12);
        }
    }
}

TEST(RunBandit, PhaseTwoPolicyIsFairInEstimatedUtility) {
    const auto env = standard_environment(LinkKind::Logistic, 3);
    const auto params = make_params(4000, 3, 0.3);
    Rng rng(9);
    const auto trace = run_bandit(env, params, rng);
    // price as a function of u_hat = x'theta_hat is trim(pi + d~ u_hat): slope d~ <= delta0
    std::vector<double> knots;
    for (double u = -1.0; u <= 2.0; u += 0.01) knots.push_back(u);
    for (double arm : trace.ucb.arms) {
        const auto policy = PiecewiseLinearPolicy::linear(arm, params.delta0_tilde, params.delta0_tilde,
                                                          env.model.price_interval(), knots);
        EXPECT_TRUE(check_fairness(policy, params.delta0_tilde, 1e-9));
    }
}

TEST(RunBandit, FairLinearEnvironment) {
    const auto env = standard_environment(LinkKind::Linear, 3);
    const auto bench = compute_benchmark(env, 0.3);
    const auto params = make_params(10'000, 3, 0.3);
    int clean = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        clean += run_bandit(env, bench, params, rng, RunOptions{false}).fairness_violations == 0;
    }
    EXPECT_GE(clean, 4);
}

TEST(RunBandit, MeanCumulativeRegretNonNegative) {
    const auto env = standard_environment(LinkKind::Logistic, 3);
    const auto bench = compute_benchmark(env, 0.3);
    const auto params = make_params(2000, 3, 0.3);
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        total += run_bandit(env, bench, params, rng, RunOptions{false}).cumulative_regret;
    }
    EXPECT_GE(total / 20, 0.0);
}

TEST(RunBandit, ExhaustedCushionIsFlagged) {
    const auto env = standard_environment(LinkKind::Logistic, 1);
    const auto params = make_params(64, 1, 0.05); // kappa1 / sqrt(T0) > delta0
    ASSERT_EQ(params.delta0_tilde, 0.0);
    Rng rng(1);
    const auto trace = run_bandit(env, params, rng);
    EXPECT_EQ(trace.utility_slope, 0.0);
    EXPECT_EQ(trace.fairness_violations, 0u);
    bool flagged = false;
    for (const auto& d : trace.diagnostics) flagged |= d.find("cushion") != std::string::npos;
    EXPECT_TRUE(flagged);
}
