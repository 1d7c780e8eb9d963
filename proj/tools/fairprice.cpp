// fairprice command-line front end.
#include "fairprice/fairprice.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fp = fairprice;
using fp::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
    auto* opt = cmd->add_option("--config", c.config, "JSON config file");
    if (needs_config) opt->required();
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--out", c.out, "output path (stdout when omitted)");
}

// Writes the primary output to --out, or stdout.
void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    const auto parent = std::filesystem::path(out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    fp::write_text_file(out, text);
}

// path/to/name.csv -> path/to/name.<ext>
std::string sidecar(const std::string& out, const std::string& ext) {
    return std::filesystem::path(out).replace_extension(ext).string();
}

double config_double(const json& cfg, const char* key, std::optional<double> flag, double fallback) {
    if (flag) return *flag;
    return fp::get_or(cfg, key, fallback);
}

fp::ParamMode parse_mode(const std::string& mode) {
    if (mode == "computational") return fp::ParamMode::Computational;
    if (mode == "theoretical") return fp::ParamMode::Theoretical;
    throw fp::ConfigError("unknown mode '" + mode + "'");
}

fp::BanditParams bandit_params(const fp::Environment& env, const fp::FairBenchmark& bench, std::uint64_t T,
                               double delta0, fp::ParamMode mode) {
    fp::TheoryConstants constants;
    if (mode == fp::ParamMode::Theoretical) constants = fp::theory_constants(env, bench.bounds);
    return fp::make_params(T, env.model.theta0.size(), delta0, mode, constants);
}

// ---------------------------------------------------------------------------

struct PolicyArgs {
    Common c;
    std::optional<double> delta0, eps;
    std::string method = "auto";
    std::string value_table;
};

int run_policy_solve(const PolicyArgs& a) {
    const json cfg = fp::load_json_file(a.c.config);
    fp::Environment env = fp::load_environment(cfg);
    if (a.c.seed) env.rng_seed = *a.c.seed;
    const double delta0 = config_double(cfg, "delta0", a.delta0, 0.5);
    const double eps = config_double(cfg, "eps", a.eps, 1e-2);
    if (!(delta0 > 0.0)) throw fp::ConfigError("delta0 must be positive");
    if (!(eps > 0.0)) throw fp::ConfigError("eps must be positive");

    const auto dist = env.utility_distribution();
    const auto grid = fp::utility_grid_for(dist, eps);
    fp::PiecewiseLinearPolicy policy;
    json summary{{"delta0", delta0}, {"eps", eps}};
    std::optional<fp::DpSolution> sol;
    if (a.method == "dp") {
        sol = fp::solve_dp(env.model, grid, delta0, eps);
    } else if (a.method == "linear") {
        auto res = fp::linear_optimal_policy(env.model, grid, delta0);
        policy = res.policy;
        if (!res.warning.empty()) summary["warning"] = res.warning;
    } else if (a.method == "auto") {
        const auto bench = fp::compute_benchmark(env, delta0, eps);
        if (bench.linear_path) policy = bench.policy;
        else sol = fp::solve_dp(env.model, grid, delta0, eps);
    } else {
        throw fp::ConfigError("unknown method '" + a.method + "'");
    }
    if (sol) {
        policy = fp::build_policy(*sol, grid, delta0);
        summary["objective"] = sol->objective;
        if (!a.value_table.empty()) emit(a.value_table, fp::to_csv(fp::value_table_csv(*sol, grid)));
    } else if (!a.value_table.empty()) {
        throw fp::ConfigError("--value-table needs the dynamic program (method dp, or auto without a linear path)");
    }
    summary["method"] = sol ? "dp" : "linear";
    summary["revenue"] = fp::evaluate_policy_revenue(policy, env.model, grid);
    summary["fair"] = fp::check_fairness(policy, delta0);
    summary["policy"] = fp::policy_sidecar(policy);

    emit(a.c.out, fp::to_csv(fp::policy_table(policy)));
    if (!a.c.out.empty()) fp::write_text_file(sidecar(a.c.out, ".json"), summary.dump(2) + "\n");
    std::cerr << summary.dump() << "\n";
    return kOk;
}

struct CurveArgs {
    Common c;
    std::string delta0 = "0.1:1.5:0.1";
    std::optional<double> eps;
};

int run_fairness_curve(const CurveArgs& a) {
    const json cfg = fp::load_json_file(a.c.config);
    fp::Environment env = fp::load_environment(cfg);
    if (a.c.seed) env.rng_seed = *a.c.seed;
    const double eps = config_double(cfg, "eps", a.eps, 1e-2);
    const auto table = fp::rho_curve(env.model, env.utility_distribution(), fp::parse_sweep(a.delta0), eps);
    emit(a.c.out, fp::to_csv(table));
    return kOk;
}

struct BanditArgs {
    Common c;
    std::optional<std::uint64_t> T;
    std::optional<double> delta0;
    std::string mode = "computational";
};

int run_bandit_run(const BanditArgs& a) {
    const json cfg = fp::load_json_file(a.c.config);
    const fp::Environment env = fp::load_environment(cfg);
    const std::uint64_t seed = a.c.seed.value_or(fp::get_or<std::uint64_t>(cfg, "seed", 1));
    const std::uint64_t T = a.T.value_or(fp::get_or<std::uint64_t>(cfg, "T", 1000));
    const double delta0 = config_double(cfg, "delta0", a.delta0, 0.3);
    const auto bench = fp::compute_benchmark(env, delta0);
    const auto params = bandit_params(env, bench, T, delta0, parse_mode(a.mode));
    fp::Rng rng(seed);
    const auto trace = fp::run_bandit(env, bench, params, rng);
    const json summary = fp::trace_summary(trace, seed);
    emit(a.c.out, fp::to_csv(fp::trace_table(trace)));
    if (!a.c.out.empty()) fp::write_text_file(sidecar(a.c.out, ".json"), summary.dump(2) + "\n");
    std::cerr << summary.dump() << "\n";
    return kOk;
}

struct SweepArgs {
    Common c;
    std::string T_list;
    std::string log2_T;
    std::optional<std::size_t> trials;
    std::optional<double> delta0;
    std::string mode = "computational";
};

std::vector<std::uint64_t> horizons(const SweepArgs& a, const json& cfg) {
    std::vector<std::uint64_t> out;
    if (!a.T_list.empty() && !a.log2_T.empty()) throw fp::ConfigError("give either --T-list or --log2-T");
    if (!a.log2_T.empty()) {
        const auto colon = a.log2_T.find(':');
        if (colon == std::string::npos) throw fp::ConfigError("--log2-T expects lo:hi");
        const auto lo = static_cast<int>(fp::parse_number(a.log2_T.substr(0, colon)));
        const auto hi = static_cast<int>(fp::parse_number(a.log2_T.substr(colon + 1)));
        if (lo < 3 || hi > 40 || hi < lo) throw fp::ConfigError("--log2-T range must lie in [3, 40]");
        for (int e = lo; e <= hi; ++e) out.push_back(std::uint64_t{1} << e);
        return out;
    }
    if (!a.T_list.empty()) {
        for (double v : fp::parse_sweep(a.T_list)) {
            if (!(v >= 1.0) || v != std::floor(v)) throw fp::ConfigError("horizons must be positive integers");
            out.push_back(static_cast<std::uint64_t>(v));
        }
        return out;
    }
    if (cfg.contains("T_list")) return cfg.at("T_list").get<std::vector<std::uint64_t>>();
    return {1024, 2048, 4096, 8192};
}

int run_bandit_sweep(const SweepArgs& a) {
    const json cfg = fp::load_json_file(a.c.config);
    const fp::Environment env = fp::load_environment(cfg);
    const std::uint64_t seed = a.c.seed.value_or(fp::get_or<std::uint64_t>(cfg, "seed", 1));
    const std::size_t trials = a.trials.value_or(fp::get_or<std::size_t>(cfg, "trials", 20));
    const double delta0 = config_double(cfg, "delta0", a.delta0, 0.3);
    const auto T_list = horizons(a, cfg);
    const auto mode = parse_mode(a.mode);
    fp::TheoryConstants constants;
    if (mode == fp::ParamMode::Theoretical) constants = fp::theory_constants(env, fp::compute_benchmark(env, delta0).bounds);
    const auto result = fp::regret_sweep(env, T_list, trials, seed, delta0, mode, constants);

    json summary{{"seed", seed}, {"trials", trials}, {"delta0", delta0}};
    std::vector<std::pair<double, double>> points;
    for (const auto& row : result.table.rows) points.emplace_back(row[0], row[1]);
    if (points.size() >= 2) {
        try {
            summary["loglog_slope"] = fp::loglog_slope(points);
        } catch (const fp::DomainError& e) {
            summary["loglog_slope"] = nullptr;
            summary["slope_error"] = e.what();
        }
    }
    emit(a.c.out, fp::to_csv(result.table));
    if (!a.c.out.empty()) fp::write_text_file(sidecar(a.c.out, ".json"), summary.dump(2) + "\n");
    std::cerr << summary.dump() << "\n";
    return kOk;
}

struct PlotArgs {
    std::string in, out, x, title;
    std::vector<std::string> y;
    bool log_x = false, log_y = false;
};

int run_plot(const PlotArgs& a) {
    const auto table = fp::read_csv_file(a.in);
    fp::SvgOptions opt;
    opt.title = a.title;
    opt.x_column = a.x;
    opt.y_columns = a.y;
    opt.log_x = a.log_x;
    opt.log_y = a.log_y;
    emit(a.out, fp::render_svg(table, opt));
    return kOk;
}

struct EstimateArgs {
    std::string in, out, link = "logistic";
    double price_coeff = 0.5;
};

int run_estimate(const EstimateArgs& a) {
    const auto data = fp::observations_from_table(fp::read_csv_file(a.in));
    if (data.empty()) throw fp::ConfigError("'" + a.in + "' has no observations");
    const fp::LikelihoodSpec spec{fp::link_kind_from_string(a.link), a.price_coeff};
    emit(a.out, fp::estimate_json(fp::mle_fit(spec, data)).dump(2) + "\n");
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fairness-constrained contextual pricing"};
    app.require_subcommand(1);

    PolicyArgs policy;
    auto* policy_cmd = app.add_subcommand("policy", "optimal fair pricing policies")->require_subcommand(1);
    auto* solve = policy_cmd->add_subcommand("solve", "solve for the optimal fair policy");
    add_common(solve, policy.c);
    solve->add_option("--delta0", policy.delta0, "fairness slope bound");
    solve->add_option("--eps", policy.eps, "utility grid resolution");
    solve->add_option("--method", policy.method, "auto, dp or linear");
    solve->add_option("--value-table", policy.value_table, "write the DP value table to this CSV");

    CurveArgs curve;
    auto* fairness_cmd = app.add_subcommand("fairness", "cost of fairness")->require_subcommand(1);
    auto* curve_cmd = fairness_cmd->add_subcommand("curve", "rho over a delta0 sweep");
    add_common(curve_cmd, curve.c);
    curve_cmd->add_option("--delta0", curve.delta0, "start:stop:step or a comma list");
    curve_cmd->add_option("--eps", curve.eps, "utility grid resolution");

    BanditArgs run;
    SweepArgs sweep;
    auto* bandit_cmd = app.add_subcommand("bandit", "learning simulations")->require_subcommand(1);
    auto* run_cmd = bandit_cmd->add_subcommand("run", "one simulated trace");
    add_common(run_cmd, run.c);
    run_cmd->add_option("--T", run.T, "horizon");
    run_cmd->add_option("--delta0", run.delta0, "fairness slope bound");
    run_cmd->add_option("--mode", run.mode, "computational or theoretical");
    auto* sweep_cmd = bandit_cmd->add_subcommand("sweep", "relative regret over horizons");
    add_common(sweep_cmd, sweep.c);
    sweep_cmd->add_option("--T-list", sweep.T_list, "comma list of horizons");
    sweep_cmd->add_option("--log2-T", sweep.log2_T, "lo:hi, horizons 2^lo..2^hi");
    sweep_cmd->add_option("--trials", sweep.trials, "trials per horizon");
    sweep_cmd->add_option("--delta0", sweep.delta0, "fairness slope bound");
    sweep_cmd->add_option("--mode", sweep.mode, "computational or theoretical");

    PlotArgs plot;
    auto* plot_cmd = app.add_subcommand("plot", "CSV to SVG line chart");
    plot_cmd->add_option("--in", plot.in, "input CSV")->required();
    plot_cmd->add_option("--out", plot.out, "output SVG (stdout when omitted)");
    plot_cmd->add_option("--x", plot.x, "x column");
    plot_cmd->add_option("--y", plot.y, "y columns");
    plot_cmd->add_option("--title", plot.title, "chart title");
    plot_cmd->add_flag("--log-x", plot.log_x, "log-scale x axis");
    plot_cmd->add_flag("--log-y", plot.log_y, "log-scale y axis");

    EstimateArgs est;
    auto* est_cmd = app.add_subcommand("estimate", "maximum-likelihood fit from x1..xd,p,y observations");
    est_cmd->add_option("--in", est.in, "observation CSV")->required();
    est_cmd->add_option("--out", est.out, "output JSON (stdout when omitted)");
    est_cmd->add_option("--link", est.link, "linear, logistic or exponential");
    est_cmd->add_option("--price-coeff", est.price_coeff, "price coefficient c");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kConfigError;
    }

    try {
        if (*solve) return run_policy_solve(policy);
        if (*curve_cmd) return run_fairness_curve(curve);
        if (*run_cmd) return run_bandit_run(run);
        if (*sweep_cmd) return run_bandit_sweep(sweep);
        if (*plot_cmd) return run_plot(plot);
        if (*est_cmd) return run_estimate(est);
    } catch (const std::invalid_argument& e) { // ConfigError and bad parameters
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kConfigError;
}
