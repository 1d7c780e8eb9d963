#pragma once

#include "fairprice/errors.hpp"
#include "fairprice/numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fairprice {

using Rng = std::mt19937_64;

enum class DistKind { Uniform, Normal, Laplace, StudentT3, PointMass, Empirical };

inline std::string_view to_string(DistKind kind) {
    switch (kind) {
    case DistKind::Uniform: return "uniform";
    case DistKind::Normal: return "normal";
    case DistKind::Laplace: return "laplace";
    case DistKind::StudentT3: return "student_t3";
    case DistKind::PointMass: return "point_mass";
    case DistKind::Empirical: return "empirical";
    }
    return "unknown";
}

inline DistKind dist_kind_from_string(std::string_view name) {
    if (name == "uniform") return DistKind::Uniform;
    if (name == "normal") return DistKind::Normal;
    if (name == "laplace") return DistKind::Laplace;
    if (name == "student_t3" || name == "t3") return DistKind::StudentT3;
    if (name == "point_mass" || name == "point") return DistKind::PointMass;
    if (name == "empirical") return DistKind::Empirical;
    throw ConfigError("unknown distribution kind '" + std::string(name) + "'");
}

/// First moment and second raw moment (not the variance).
struct Moments {
    double mu = 0.0;
    double nu_sq = 0.0;

    double variance() const { return nu_sq - mu * mu; }
};

struct MonteCarloMoments {
    Moments moments;
    double se_mu = 0.0;
    double se_nu_sq = 0.0;
};

namespace detail {

// Standardized (mean 0, sd 1) location-scale families.
inline double std_pdf(DistKind kind, double z) {
    using std::numbers::pi;
    switch (kind) {
    case DistKind::Normal: return std::exp(-0.5 * z * z) / std::sqrt(2.0 * pi);
    case DistKind::Laplace: {
        const double b = 1.0 / std::numbers::sqrt2;
        return std::exp(-std::abs(z) / b) / (2.0 * b);
    }
    case DistKind::StudentT3: {
        const double t = std::numbers::sqrt3 * z;
        const double d = 3.0 + t * t;
        return std::numbers::sqrt3 * 6.0 * std::numbers::sqrt3 / (pi * d * d);
    }
    default: return 0.0;
    }
}

inline double std_cdf(DistKind kind, double z) {
    using std::numbers::pi;
    switch (kind) {
    case DistKind::Normal: return 0.5 * std::erfc(-z / std::numbers::sqrt2);
    case DistKind::Laplace: {
        const double b = 1.0 / std::numbers::sqrt2;
        return z < 0.0 ? 0.5 * std::exp(z / b) : 1.0 - 0.5 * std::exp(-z / b);
    }
    case DistKind::StudentT3: {
        const double s = z; // t / sqrt(3) where t = sqrt(3) z
        return 0.5 + (s / (1.0 + s * s) + std::atan(s)) / pi;
    }
    default: return 0.0;
    }
}

} // namespace detail

/**
 * Distribution of the baseline utility u, clipped to [-B, B].
 *
 * Location-scale families (Normal, Laplace, StudentT3) are calibrated at
 * construction so that the clipped distribution has the requested mean and
 * standard deviation. Clipping clamps draws, so tail mass sits on +-B.
 * B may be infinite, which disables clipping.
 */
class UtilityDistribution {
public:
    static UtilityDistribution uniform(double lo, double hi, double clip = inf()) {
        if (!(lo <= hi)) throw ConfigError("uniform: lo must not exceed hi");
        UtilityDistribution d(DistKind::Uniform, clip);
        d.lo_ = lo;
        d.hi_ = hi;
        d.init_targets();
        return d;
    }
    static UtilityDistribution uniform_mean_sd(double mu, double sigma, double clip = inf()) {
        const double half = std::numbers::sqrt3 * sigma;
        return uniform(mu - half, mu + half, clip);
    }
    static UtilityDistribution normal(double mu, double sigma, double clip = inf()) {
        return location_scale(DistKind::Normal, mu, sigma, clip);
    }
    static UtilityDistribution laplace(double mu, double sigma, double clip = inf()) {
        return location_scale(DistKind::Laplace, mu, sigma, clip);
    }
    static UtilityDistribution student_t3(double mu, double sigma, double clip = inf()) {
        return location_scale(DistKind::StudentT3, mu, sigma, clip);
    }
    static UtilityDistribution point_mass(double c, double clip = inf()) {
        UtilityDistribution d(DistKind::PointMass, clip);
        d.lo_ = d.hi_ = d.loc_ = c;
        d.init_targets();
        return d;
    }
    static UtilityDistribution empirical(std::vector<double> samples, double clip = inf()) {
        if (samples.empty()) throw ConfigError("empirical: no samples");
        UtilityDistribution d(DistKind::Empirical, clip);
        for (double& s : samples) s = d.clip(s);
        std::sort(samples.begin(), samples.end());
        d.samples_ = std::move(samples);
        d.init_targets();
        return d;
    }
    static UtilityDistribution location_scale(DistKind kind, double mu, double sigma, double clip = inf()) {
        if (sigma < 0.0) throw ConfigError("scale must be non-negative");
        if (sigma == 0.0) return point_mass(mu, clip);
        UtilityDistribution d(kind, clip);
        d.target_mu_ = mu;
        d.target_sigma_ = sigma;
        d.loc_ = mu;
        d.scale_ = sigma;
        d.calibrate();
        return d;
    }

    DistKind kind() const { return kind_; }
    double clip_bound() const { return clip_; }
    /// Target mean of the clipped distribution.
    double location() const { return target_mu_; }
    /// Target standard deviation of the clipped distribution.
    double scale() const { return target_sigma_; }
    /// Raw (pre-clip) location and scale after calibration.
    double raw_location() const { return loc_; }
    double raw_scale() const { return scale_; }
    const std::vector<double>& samples() const { return samples_; }

    double clip(double u) const { return std::clamp(u, -clip_, clip_); }

    /// P(U < x) for the clipped variable U.
    double cdf_below(double x) const {
        if (x <= -clip_) return 0.0;
        if (x > clip_) return 1.0;
        switch (kind_) {
        case DistKind::PointMass: return clip(loc_) < x ? 1.0 : 0.0;
        case DistKind::Empirical: {
            auto it = std::lower_bound(samples_.begin(), samples_.end(), x);
            return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
        }
        case DistKind::Uniform:
            if (hi_ == lo_) return lo_ < x ? 1.0 : 0.0;
            return std::clamp((x - lo_) / (hi_ - lo_), 0.0, 1.0);
        default: return detail::std_cdf(kind_, (x - loc_) / scale_);
        }
    }

    /// Moments of the clipped distribution: exact for point masses and samples, quadrature otherwise.
    Moments moments() const {
        switch (kind_) {
        case DistKind::PointMass: {
            const double c = clip(loc_);
            return {c, c * c};
        }
        case DistKind::Empirical: {
            Moments m;
            for (double s : samples_) {
                m.mu += s;
                m.nu_sq += s * s;
            }
            const auto n = static_cast<double>(samples_.size());
            return {m.mu / n, m.nu_sq / n};
        }
        default: return clipped_moments(loc_, scale_);
        }
    }

    /// Seeded Monte-Carlo estimate of the moments with standard errors.
    MonteCarloMoments moments_monte_carlo(std::size_t n = 1'000'000, std::uint64_t seed = 12345) const {
        Rng rng(seed);
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = sample(rng);
            const double u2 = u * u;
            s1 += u;
            s2 += u2;
            s3 += u2 * u;
            s4 += u2 * u2;
        }
        const auto dn = static_cast<double>(n);
        MonteCarloMoments out;
        out.moments = {s1 / dn, s2 / dn};
        const double var1 = std::max(0.0, out.moments.nu_sq - out.moments.mu * out.moments.mu);
        const double var2 = std::max(0.0, s4 / dn - out.moments.nu_sq * out.moments.nu_sq);
        out.se_mu = std::sqrt(var1 / dn);
        out.se_nu_sq = std::sqrt(var2 / dn);
        return out;
    }

    /// One clipped draw.
    double sample(Rng& rng) const {
        switch (kind_) {
        case DistKind::PointMass: return clip(loc_);
        case DistKind::Empirical: {
            std::uniform_int_distribution<std::size_t> pick(0, samples_.size() - 1);
            return samples_[pick(rng)];
        }
        case DistKind::Uniform: {
            std::uniform_real_distribution<double> uni(lo_, hi_);
            return clip(hi_ == lo_ ? lo_ : uni(rng));
        }
        case DistKind::Normal: {
            std::normal_distribution<double> z;
            return clip(loc_ + scale_ * z(rng));
        }
        case DistKind::Laplace: {
            std::uniform_real_distribution<double> uni(-0.5, 0.5);
            const double v = uni(rng);
            const double b = 1.0 / std::numbers::sqrt2;
            const double z = (v < 0.0 ? 1.0 : -1.0) * b * std::log1p(-2.0 * std::abs(v));
            return clip(loc_ + scale_ * z);
        }
        case DistKind::StudentT3: {
            std::student_t_distribution<double> t(3.0);
            return clip(loc_ + scale_ * t(rng) / std::numbers::sqrt3);
        }
        }
        return 0.0;
    }

private:
    UtilityDistribution(DistKind kind, double clip) : kind_(kind), clip_(clip) {
        if (!(clip > 0.0)) throw ConfigError("clip bound B must be positive");
    }

    static constexpr double inf() { return std::numeric_limits<double>::infinity(); }

    void init_targets() {
        const Moments m = moments();
        target_mu_ = m.mu;
        target_sigma_ = std::sqrt(std::max(0.0, m.variance()));
    }

    Moments clipped_moments(double loc, double scale) const {
        if (kind_ != DistKind::Uniform && !std::isfinite(clip_)) return {loc, loc * loc + scale * scale};
        auto pdf = [&](double x) {
            if (kind_ == DistKind::Uniform) return 1.0 / (hi_ - lo_);
            return detail::std_pdf(kind_, (x - loc) / scale) / scale;
        };
        double a = -clip_, b = clip_;
        if (kind_ == DistKind::Uniform) {
            if (hi_ == lo_) {
                const double c = clip(lo_);
                return {c, c * c};
            }
            a = std::max(a, lo_);
            b = std::min(b, hi_);
        }
        Moments m;
        if (std::isfinite(clip_)) {
            const double below = cdf_raw(-clip_, loc, scale);
            const double above = 1.0 - cdf_raw(clip_, loc, scale);
            m = {-clip_ * below + clip_ * above, clip_ * clip_ * (below + above)};
        }
        if (b > a) {
            constexpr int n = 20000; // Simpson panels
            const double h = (b - a) / n;
            double s1 = 0.0, s2 = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double x = a + h * i;
                const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
                const double p = w * pdf(x);
                s1 += p * x;
                s2 += p * x * x;
            }
            m.mu += s1 * h / 3.0;
            m.nu_sq += s2 * h / 3.0;
        }
        return m;
    }

    double cdf_raw(double x, double loc, double scale) const {
        if (kind_ == DistKind::Uniform) return std::clamp((x - lo_) / (hi_ - lo_), 0.0, 1.0);
        return detail::std_cdf(kind_, (x - loc) / scale);
    }

    void calibrate() {
        if (!std::isfinite(clip_)) return;
        for (int it = 0; it < 200; ++it) {
            const Moments m = clipped_moments(loc_, scale_);
            const double sd = std::sqrt(std::max(m.variance(), 1e-300));
            const double dm = target_mu_ - m.mu;
            const double ratio = target_sigma_ / sd;
            if (std::abs(dm) < 1e-12 * (1.0 + std::abs(target_mu_)) && std::abs(ratio - 1.0) < 1e-12) break;
            loc_ += dm;
            scale_ *= ratio;
        }
    }

    DistKind kind_;
    double clip_;
    double lo_ = 0.0, hi_ = 0.0;
    double loc_ = 0.0, scale_ = 1.0;
    double target_mu_ = 0.0, target_sigma_ = 0.0;
    std::vector<double> samples_;
};

inline Moments moments(const UtilityDistribution& dist) { return dist.moments(); }

inline double sample_utility(const UtilityDistribution& dist, Rng& rng) { return dist.sample(rng); }

/// Discretized utility support: cell centers u_k spaced by eps and cell probabilities gamma_k.
struct UtilityGrid {
    std::vector<double> points;
    std::vector<double> weights;
    double eps = 0.0;

    std::size_t size() const { return points.size(); }

    Moments moments() const {
        Moments m;
        for (std::size_t k = 0; k < points.size(); ++k) {
            m.mu += weights[k] * points[k];
            m.nu_sq += weights[k] * points[k] * points[k];
        }
        return m;
    }

    /// Index range of cells carrying positive probability.
    std::pair<std::size_t, std::size_t> support() const {
        std::size_t first = 0, last = weights.size();
        while (first < weights.size() && weights[first] <= 0.0) ++first;
        while (last > first && weights[last - 1] <= 0.0) --last;
        return {first, last};
    }
};

/// Number of cells covering [-B, B] at resolution eps, ceil(2B / eps).
inline std::size_t grid_cell_count(double B, double eps) {
    const double ratio = 2.0 * B / eps;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio)));
}

/**
 * Discretize a utility distribution onto ceil(2B / eps) cells centered on 0
 * with spacing eps. Cells are half-open [u_k - eps/2, u_k + eps/2); mass
 * outside the covered range is folded into the edge cells, so weights sum to 1.
 */
inline UtilityGrid discretize(const UtilityDistribution& dist, double B, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("discretize: eps must be positive");
    if (!(B > 0.0)) throw std::invalid_argument("discretize: B must be positive");
    const std::size_t m = grid_cell_count(B, eps);
    UtilityGrid grid;
    grid.eps = eps;
    grid.points.resize(m);
    grid.weights.resize(m);
    const double first = -0.5 * static_cast<double>(m - 1) * eps;
    for (std::size_t k = 0; k < m; ++k) grid.points[k] = first + eps * static_cast<double>(k);
    double prev = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double cum = (k + 1 == m) ? 1.0 : std::max(prev, dist.cdf_below(grid.points[k] + 0.5 * eps));
        grid.weights[k] = cum - prev;
        prev = cum;
    }
    return grid;
}

/// Generates context vectors x with independent coordinates; u = x'theta0.
struct ContextGenerator {
    std::vector<double> theta0;
    /// One distribution per coordinate, or a single one shared by all coordinates.
    std::vector<UtilityDistribution> coords;

    std::size_t dim() const { return theta0.size(); }

    const UtilityDistribution& coord(std::size_t i) const { return coords.size() == 1 ? coords[0] : coords.at(i); }

    void validate() const {
        if (theta0.empty()) throw ConfigError("context generator: dimension must be >= 1");
        if (coords.size() != 1 && coords.size() != theta0.size())
            throw ConfigError("context generator: need 1 or d coordinate distributions");
    }

    /// Smallest coordinate variance, which is the minimum covariance eigenvalue for independent coordinates.
    double declared_sigma_x() const {
        double out = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < dim(); ++i) out = std::min(out, coord(i).moments().variance());
        return out;
    }
};

inline std::vector<double> sample_context(const ContextGenerator& gen, Rng& rng) {
    std::vector<double> x(gen.dim());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = gen.coord(i).sample(rng);
    return x;
}

/// Empirical utility distribution implied by the generator, from n seeded draws.
inline UtilityDistribution implied_utility_distribution(const ContextGenerator& gen, std::size_t n, std::uint64_t seed,
                                                        double clip = std::numeric_limits<double>::infinity()) {
    Rng rng(seed);
    std::vector<double> us(n);
    for (auto& u : us) {
        const auto x = sample_context(gen, rng);
        u = dot(x, gen.theta0);
    }
    return UtilityDistribution::empirical(std::move(us), clip);
}

/// Smallest eigenvalue of the empirical covariance of n generated contexts.
inline double min_covariance_eigenvalue(const ContextGenerator& gen, std::size_t n, Rng& rng) {
    const auto d = static_cast<Eigen::Index>(gen.dim());
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
        const auto x = sample_context(gen, rng);
        for (Eigen::Index j = 0; j < d; ++j) xs(i, j) = x[static_cast<std::size_t>(j)];
    }
    const Eigen::RowVectorXd mean = xs.colwise().mean();
    const Eigen::MatrixXd centered = xs.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    return eig.eigenvalues().minCoeff();
}

} // namespace fairprice
