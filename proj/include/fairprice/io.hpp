#pragma once

#include "fairprice/demand_model.hpp"
#include "fairprice/environment.hpp"
#include "fairprice/errors.hpp"
#include "fairprice/estimation.hpp"
#include "fairprice/fair_bandit.hpp"
#include "fairprice/fair_policy_solver.hpp"
#include "fairprice/utility_distributions.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace fairprice {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Numeric CSV

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf, end);
}

inline double parse_number(std::string_view text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ConfigError("not a number: '" + std::string(text) + "'");
    return v;
}

/// A CSV file whose body cells are all numbers. Writing uses format_number, so
/// reading a written table and writing it again reproduces the same bytes.
struct NumericTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ConfigError("no column named '" + std::string(name) + "'");
    }

    std::vector<double> values(std::string_view name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.at(c));
        return out;
    }
};

inline void write_csv(std::ostream& os, const NumericTable& table) {
    for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
        os << '\n';
    }
}

inline std::string to_csv(const NumericTable& table) {
    std::ostringstream os;
    write_csv(os, table);
    return os.str();
}

inline NumericTable read_csv(std::istream& is) {
    NumericTable table;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(is, line)) throw ConfigError("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split(line);
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != table.header.size())
            throw ConfigError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(table.header.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_number(c));
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline NumericTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return read_csv(in);
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline void write_csv_file(const std::string& path, const NumericTable& table) { write_text_file(path, to_csv(table)); }

// ---------------------------------------------------------------------------
// Domain objects <-> CSV

inline NumericTable policy_table(const PiecewiseLinearPolicy& policy) {
    NumericTable t{{"u", "price"}, {}};
    for (std::size_t i = 0; i < policy.knots.size(); ++i) t.rows.push_back({policy.knots[i], policy.prices[i]});
    return t;
}

inline json policy_sidecar(const PiecewiseLinearPolicy& policy) {
    json j{{"delta0", policy.delta0},
           {"form", policy.form == PiecewiseLinearPolicy::Form::Linear ? "linear" : "interpolated"}};
    if (policy.form == PiecewiseLinearPolicy::Form::Linear) {
        j["pi0"] = policy.pi0;
        j["slope"] = policy.slope;
    }
    return j;
}

/// V(k, j) with the cell utility and price.
inline NumericTable value_table_csv(const DpSolution& sol, const UtilityGrid& grid) {
    NumericTable t{{"k", "u", "j", "price", "value"}, {}};
    for (std::size_t k = 0; k < grid.size(); ++k)
        for (std::size_t j = 0; j < sol.price_count(); ++j)
            t.rows.push_back({static_cast<double>(k), grid.points[k], static_cast<double>(j), sol.price_grid[j],
                              sol.value(k, j)});
    return t;
}

inline NumericTable trace_table(const RegretTrace& trace) {
    NumericTable t{{"t", "arm", "price", "y", "instant_regret", "cum_regret"}, {}};
    t.rows.reserve(trace.records.size());
    for (const auto& r : trace.records)
        t.rows.push_back({static_cast<double>(r.t), static_cast<double>(r.arm), r.price, r.y, r.instant_regret,
                          r.cum_regret});
    return t;
}

inline json trace_summary(const RegretTrace& trace, std::uint64_t seed) {
    const auto& p = trace.params;
    return json{{"seed", seed},
                {"T", p.T},
                {"T0", p.T0},
                {"K", p.K},
                {"kappa1", p.kappa1},
                {"kappa2", p.kappa2},
                {"delta0_tilde", p.delta0_tilde},
                {"theta_err", trace.theta_err},
                {"cum_regret", trace.cumulative_regret},
                {"relative_regret", trace.relative_regret()},
                {"fairness_violations", trace.fairness_violations},
                {"utility_slope", trace.utility_slope},
                {"orthogonal_leak", trace.orthogonal_leak},
                {"diagnostics", trace.diagnostics}};
}

/// Observations from `x1,...,xd,p,y`.
inline std::vector<Observation> observations_from_table(const NumericTable& table) {
    if (table.header.size() < 3) throw ConfigError("observation CSV needs x1..xd,p,y columns");
    const std::size_t d = table.header.size() - 2;
    std::vector<Observation> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) out.push_back({std::vector<double>(row.begin(), row.begin() + d), row[d], row[d + 1]});
    return out;
}

inline json estimate_json(const ModelEstimate& est) {
    return json{{"theta_hat", est.theta_hat},
                {"alpha_hat", est.alpha_hat},
                {"n_obs", est.n_obs},
                {"converged", est.converged},
                {"final_gradient_norm", est.final_gradient_norm},
                {"iterations", est.iterations},
                {"diagnostic", est.diagnostic}};
}

// ---------------------------------------------------------------------------
// JSON configuration

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline json demand_model_to_json(const DemandModel& m) {
    return json{{"link", std::string(to_string(m.link.kind))},
                {"theta0", m.theta0},
                {"alpha0", m.alpha0},
                {"price_coeff", m.price_coeff},
                {"price_min", m.price_min},
                {"price_max", m.price_max}};
}

inline DemandModel demand_model_from_json(const json& j) {
    try {
        DemandModel m;
        m.link.kind = link_kind_from_string(j.at("link").get<std::string>());
        m.theta0 = get_or<std::vector<double>>(j, "theta0", {});
        m.alpha0 = j.at("alpha0").get<double>();
        m.price_coeff = get_or(j, "price_coeff", 0.5);
        m.price_min = get_or(j, "price_min", 0.0);
        m.price_max = get_or(j, "price_max", 1.0);
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

/// {"kind":"normal","mu":1.0,"sigma":1.0,"B":4.0}; uniform also accepts lo/hi,
/// point_mass accepts value, empirical takes samples. B defaults to no clipping.
inline UtilityDistribution distribution_from_json(const json& j) {
    try {
        const auto kind = dist_kind_from_string(j.at("kind").get<std::string>());
        const double B = get_or(j, "B", std::numeric_limits<double>::infinity());
        switch (kind) {
        case DistKind::Uniform:
            if (j.contains("lo")) return UtilityDistribution::uniform(j.at("lo"), j.at("hi"), B);
            return UtilityDistribution::uniform_mean_sd(j.at("mu"), j.at("sigma"), B);
        case DistKind::PointMass:
            return UtilityDistribution::point_mass(j.contains("value") ? j.at("value").get<double>() : j.at("mu").get<double>(), B);
        case DistKind::Empirical: return UtilityDistribution::empirical(j.at("samples").get<std::vector<double>>(), B);
        default: return UtilityDistribution::location_scale(kind, j.at("mu"), j.at("sigma"), B);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("distribution: ") + e.what());
    }
}

inline json distribution_to_json(const UtilityDistribution& d) {
    json j{{"kind", std::string(to_string(d.kind()))}};
    if (std::isfinite(d.clip_bound())) j["B"] = d.clip_bound();
    switch (d.kind()) {
    case DistKind::PointMass: j["value"] = d.location(); break;
    case DistKind::Empirical: j["samples"] = d.samples(); break;
    default:
        j["mu"] = d.location();
        j["sigma"] = d.scale();
    }
    return j;
}

/// {"theta0":[...], "coords":[<distribution>...]}; theta0 defaults to the model's.
inline ContextGenerator context_from_json(const json& j, const std::vector<double>& default_theta) {
    ContextGenerator gen;
    try {
        gen.theta0 = get_or(j, "theta0", default_theta);
        for (const auto& c : j.at("coords")) gen.coords.push_back(distribution_from_json(c));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("context: ") + e.what());
    }
    gen.validate();
    return gen;
}

/// Environment from a config with "model", optional "context", optional "utility" and "seed".
inline Environment environment_from_json(const json& j) {
    if (!j.contains("model")) throw ConfigError("config is missing 'model'");
    Environment env;
    env.model = demand_model_from_json(j.at("model"));
    if (j.contains("utility")) env.utility_dist = distribution_from_json(j.at("utility"));
    if (j.contains("context")) {
        env.context_gen = context_from_json(j.at("context"), env.model.theta0);
        if (env.model.theta0.empty()) env.model.theta0 = env.context_gen.theta0;
    } else {
        if (env.model.theta0.empty()) env.model.theta0 = {1.0};
        env.context_gen.theta0 = env.model.theta0;
        const auto u = env.utility_dist.value_or(UtilityDistribution::uniform(0.0, 1.0));
        // Without a context spec, a one-dimensional context carries the utility directly.
        if (env.model.theta0.size() != 1 || env.model.theta0[0] == 0.0)
            throw ConfigError("config needs 'context' unless theta0 is one-dimensional");
        const double th = env.model.theta0[0];
        std::vector<double> scaled = [&] {
            std::vector<double> s;
            Rng rng(0xc0ffee);
            for (int i = 0; i < 100000; ++i) s.push_back(u.sample(rng) / th);
            return s;
        }();
        env.context_gen.coords = {UtilityDistribution::empirical(std::move(scaled))};
    }
    env.context_gen.theta0 = env.model.theta0;
    env.rng_seed = get_or<std::uint64_t>(j, "seed", 1);
    env.validate();
    return env;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

} // namespace fairprice
