#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace fairprice {

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(double v) const { return v >= lo && v <= hi; }
    double clamp(double v) const { return std::clamp(v, lo, hi); }
};

/// Trim a value into [lo, hi]: lo below, hi above, identity inside.
inline double trim(double v, double lo, double hi) {
    if (v < lo) return lo;
    if (v > hi) return hi;
    return v;
}

/// n evenly spaced points on [lo, hi], endpoints included. n == 1 yields the midpoint.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = 0.5 * (lo + hi);
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
    out[n - 1] = hi;
    return out;
}

struct GoldenResult {
    double x;
    double value;
};

/**
 * Golden-section search for the maximizer of a unimodal function on [lo, hi].
 * Stops once the bracket is narrower than tol. The endpoints are compared with
 * the interior estimate so that boundary maximizers are returned exactly.
 */
template <class F>
GoldenResult golden_section_max(F&& fn, double lo, double hi, double tol = 1e-9) {
    if (hi < lo) throw std::invalid_argument("golden_section_max: empty interval");
    constexpr double inv_phi = 0.6180339887498948482;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = fn(c), fd = fn(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = fn(d);
        }
    }
    GoldenResult best{0.5 * (a + b), 0.0};
    best.value = fn(best.x);
    const double flo = fn(lo), fhi = fn(hi);
    if (flo > best.value) best = {lo, flo};
    if (fhi > best.value) best = {hi, fhi};
    return best;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

/// Smallest n >= 0 with n^3 >= v, i.e. ceil(cbrt(v)) without floating-point rounding issues.
inline std::uint64_t ceil_cbrt(std::uint64_t v) {
    auto n = static_cast<std::uint64_t>(std::cbrt(static_cast<double>(v)));
    while (n > 0 && (n - 1) * (n - 1) * (n - 1) >= v) --n;
    while (n * n * n < v) ++n;
    return n;
}

inline double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace fairprice
