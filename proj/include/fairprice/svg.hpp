#pragma once

#include "fairprice/errors.hpp"
#include "fairprice/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace fairprice {

struct SvgOptions {
    std::string title;
    std::string x_column;              ///< empty: first column
    std::vector<std::string> y_columns; ///< empty: every other column
    bool log_x = false;
    bool log_y = false;
    int width = 640;
    int height = 420;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Fixed two-decimal pixel coordinates keep the output stable across platforms.
inline std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

} // namespace detail

/// Line chart of one or more columns against another.
inline std::string render_svg(const NumericTable& table, const SvgOptions& opt = {}) {
    if (table.header.size() < 2) throw ConfigError("plot: need at least two columns");
    if (table.rows.empty()) throw ConfigError("plot: table has no rows");
    const std::string xname = opt.x_column.empty() ? table.header.front() : opt.x_column;
    std::vector<std::string> ynames = opt.y_columns;
    if (ynames.empty())
        for (const auto& h : table.header)
            if (h != xname) ynames.push_back(h);

    auto transform = [](double v, bool log) {
        if (!log) return v;
        if (!(v > 0.0)) throw DomainError("plot: log axis needs positive values");
        return std::log10(v);
    };
    const auto xs_raw = table.values(xname);
    std::vector<double> xs;
    for (double v : xs_raw) xs.push_back(transform(v, opt.log_x));
    std::vector<std::vector<double>> ys;
    for (const auto& name : ynames) {
        std::vector<double> col;
        for (double v : table.values(name)) col.push_back(transform(v, opt.log_y));
        ys.push_back(std::move(col));
    }

    double x0 = *std::min_element(xs.begin(), xs.end()), x1 = *std::max_element(xs.begin(), xs.end());
    double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
    for (const auto& col : ys)
        for (double v : col) {
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
    if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }

    const double left = 70, right = 20, top = 40, bottom = 50;
    const double pw = opt.width - left - right, ph = opt.height - top - bottom;
    auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
    auto sy = [&](double v) { return top + (1.0 - (v - y0) / (y1 - y0)) * ph; };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
      << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty())
        o << "<text x=\"" << detail::px(opt.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
          << detail::svg_escape(opt.title) << "</text>\n";
    o << "<rect x=\"" << detail::px(left) << "\" y=\"" << detail::px(top) << "\" width=\"" << detail::px(pw)
      << "\" height=\"" << detail::px(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        const double lx = opt.log_x ? std::pow(10.0, fx) : fx, ly = opt.log_y ? std::pow(10.0, fy) : fy;
        o << "<text x=\"" << detail::px(sx(fx)) << "\" y=\"" << detail::px(top + ph + 18)
          << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::tick_label(lx) << "</text>\n";
        o << "<text x=\"" << detail::px(left - 6) << "\" y=\"" << detail::px(sy(fy) + 4)
          << "\" text-anchor=\"end\" font-size=\"11\">" << detail::tick_label(ly) << "</text>\n";
    }
    o << "<text x=\"" << detail::px(left + pw / 2) << "\" y=\"" << detail::px(opt.height - 10.0)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << detail::svg_escape(xname) << "</text>\n";

    for (std::size_t s = 0; s < ys.size(); ++s) {
        const char* color = palette[s % std::size(palette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i) o << ' ';
            o << detail::px(sx(xs[i])) << ',' << detail::px(sy(ys[s][i]));
        }
        o << "\"/>\n";
        o << "<text x=\"" << detail::px(left + 8) << "\" y=\"" << detail::px(top + 16 + 14.0 * s)
          << "\" font-size=\"11\" fill=\"" << color << "\">" << detail::svg_escape(ynames[s]) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace fairprice
