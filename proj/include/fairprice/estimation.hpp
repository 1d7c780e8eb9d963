#pragma once

#include "fairprice/demand_model.hpp"
#include "fairprice/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace fairprice {

/// One priced sale opportunity: context, offered price, realized demand.
struct Observation {
    std::vector<double> x;
    double p = 0.0;
    double y = 0.0;
};

/**
 * Per-link log-likelihood in the extended parameter beta = (theta, alpha) with
 * covariate z = (x, -c p), so that z'beta = x'theta - c alpha p.
 *
 *  - Linear: Gaussian pseudo-likelihood, l = -(y - s)^2 / 2.
 *  - Logistic: Bernoulli, l = y s - log(1 + e^s).
 *  - Exponential: Bernoulli with f = 1 - e^{-s}, l = y log(1 - e^{-s}) - (1 - y) s.
 *    For s below `exp_knot` the log term is replaced by its second-order Taylor
 *    expansion at the knot, a concave C^2 extension that keeps Newton iterates
 *    finite when z'beta leaves the domain.
 *
 * The regularity constants (rho_L, M_L, sigma_L) that justify the estimator's
 * rate exist for each link but never enter the computation.
 */
struct LikelihoodSpec {
    LinkKind link = LinkKind::Logistic;
    double price_coeff = 0.5;
    double exp_knot = 1e-3;

    struct Terms {
        double value; // l(s)
        double d1;    // dl/ds
        double d2;    // d2l/ds2
    };

    Terms terms(double y, double s) const {
        switch (link) {
        case LinkKind::Linear: {
            const double r = y - s;
            return {-0.5 * r * r, r, -1.0};
        }
        case LinkKind::Logistic: {
            const double sig = Link::logistic(s);
            // log(1 + e^s) computed without overflow
            const double softplus = s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
            return {y * s - softplus, y - sig, -sig * (1.0 - sig)};
        }
        case LinkKind::Exponential: {
            auto log_term = [&](double v) -> Terms {
                if (v >= exp_knot) {
                    const double em1 = std::expm1(v); // e^v - 1
                    return {std::log(-std::expm1(-v)), 1.0 / em1, -(em1 + 1.0) / (em1 * em1)};
                }
                const Terms k = [&] {
                    const double em1 = std::expm1(exp_knot);
                    return Terms{std::log(-std::expm1(-exp_knot)), 1.0 / em1, -(em1 + 1.0) / (em1 * em1)};
                }();
                const double d = v - exp_knot;
                return {k.value + k.d1 * d + 0.5 * k.d2 * d * d, k.d1 + k.d2 * d, k.d2};
            };
            const Terms g = log_term(s);
            return {y * g.value - (1.0 - y) * s, y * g.d1 - (1.0 - y), y * g.d2};
        }
        }
        return {0.0, 0.0, 0.0};
    }
};

struct LogLikelihood {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

inline Eigen::VectorXd extended_covariate(const Observation& obs, double price_coeff) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(obs.x.size()) + 1);
    for (std::size_t i = 0; i < obs.x.size(); ++i) z(static_cast<Eigen::Index>(i)) = obs.x[i];
    z(z.size() - 1) = -price_coeff * obs.p;
    return z;
}

/// Summed log-likelihood with exact gradient and Hessian.
inline LogLikelihood log_likelihood(const LikelihoodSpec& spec, const std::vector<Observation>& data,
                                    const Eigen::VectorXd& beta) {
    if (data.empty()) throw std::invalid_argument("log_likelihood: no observations");
    const Eigen::Index n = beta.size();
    LogLikelihood out;
    out.gradient = Eigen::VectorXd::Zero(n);
    out.hessian = Eigen::MatrixXd::Zero(n, n);
    for (const auto& obs : data) {
        if (static_cast<Eigen::Index>(obs.x.size()) + 1 != n)
            throw std::invalid_argument("log_likelihood: observation dimension does not match beta");
        const Eigen::VectorXd z = extended_covariate(obs, spec.price_coeff);
        const auto t = spec.terms(obs.y, z.dot(beta));
        out.value += t.value;
        out.gradient += t.d1 * z;
        out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(z, t.d2);
    }
    out.hessian = out.hessian.selfadjointView<Eigen::Lower>();
    return out;
}

struct ModelEstimate {
    std::vector<double> theta_hat;
    double alpha_hat = 0.0;
    std::size_t n_obs = 0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Norm of the gradient of the mean log-likelihood at the returned point.
    double final_gradient_norm = 0.0;
    std::string diagnostic;

    Eigen::VectorXd beta() const {
        Eigen::VectorXd b(static_cast<Eigen::Index>(theta_hat.size()) + 1);
        for (std::size_t i = 0; i < theta_hat.size(); ++i) b(static_cast<Eigen::Index>(i)) = theta_hat[i];
        b(b.size() - 1) = alpha_hat;
        return b;
    }
};

/// Default starting point: zero, with a small positive alpha for the exponential link.
inline Eigen::VectorXd default_initial_beta(const LikelihoodSpec& spec, std::size_t dim) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim) + 1);
    if (spec.link == LinkKind::Exponential) b(b.size() - 1) = 0.1;
    return b;
}

/**
 * Maximum-likelihood fit by damped Newton ascent on the mean log-likelihood.
 * The Hessian gets +1e-9 I when its Cholesky factorization fails, and steps are
 * halved until the objective does not decrease. A rank-deficient design is
 * reported with converged = false and no iterations.
 */
inline ModelEstimate mle_fit(const LikelihoodSpec& spec, const std::vector<Observation>& data,
                             Eigen::VectorXd init, double tol = 1e-8, std::size_t max_iter = 100) {
    if (data.empty()) throw std::invalid_argument("mle_fit: no observations");
    const std::size_t d = data.front().x.size();
    if (init.size() != static_cast<Eigen::Index>(d) + 1) throw std::invalid_argument("mle_fit: init dimension");

    ModelEstimate est;
    est.n_obs = data.size();
    auto store = [&](const Eigen::VectorXd& b) {
        est.theta_hat.assign(b.data(), b.data() + d);
        est.alpha_hat = b(b.size() - 1);
    };

    Eigen::MatrixXd design(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(d) + 1);
    for (std::size_t t = 0; t < data.size(); ++t)
        design.row(static_cast<Eigen::Index>(t)) = extended_covariate(data[t], spec.price_coeff).transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (data.size() < d + 1 || qr.rank() < static_cast<Eigen::Index>(d) + 1) {
        store(init);
        est.diagnostic = "rank-deficient design: rank " + std::to_string(qr.rank()) + " < " + std::to_string(d + 1) +
                         " parameters";
        return est;
    }

    const double scale = 1.0 / static_cast<double>(data.size());
    Eigen::VectorXd beta = std::move(init);
    auto ll = log_likelihood(spec, data, beta);
    for (est.iterations = 0; est.iterations < max_iter; ++est.iterations) {
        const Eigen::VectorXd g = ll.gradient * scale;
        est.final_gradient_norm = g.norm();
        if (est.final_gradient_norm <= tol) {
            est.converged = true;
            break;
        }
        Eigen::MatrixXd neg_h = -ll.hessian * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
        if (llt.info() != Eigen::Success) {
            neg_h += 1e-9 * Eigen::MatrixXd::Identity(neg_h.rows(), neg_h.cols());
            llt.compute(neg_h);
        }
        const Eigen::VectorXd step = llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(g)) : g;
        double t = 1.0;
        bool moved = false;
        for (int half = 0; half < 60; ++half, t *= 0.5) {
            const Eigen::VectorXd cand = beta + t * step;
            auto cand_ll = log_likelihood(spec, data, cand);
            if (cand_ll.value >= ll.value) {
                beta = cand;
                ll = std::move(cand_ll);
                moved = true;
                break;
            }
        }
        if (!moved) {
            est.diagnostic = "line search stalled";
            break;
        }
    }
    est.final_gradient_norm = (ll.gradient * scale).norm();
    est.converged = est.final_gradient_norm <= tol;
    if (!est.converged && est.diagnostic.empty()) est.diagnostic = "iteration limit reached";
    store(beta);
    return est;
}

inline ModelEstimate mle_fit(const LikelihoodSpec& spec, const std::vector<Observation>& data, double tol = 1e-8,
                             std::size_t max_iter = 100) {
    if (data.empty()) throw std::invalid_argument("mle_fit: no observations");
    return mle_fit(spec, data, default_initial_beta(spec, data.front().x.size()), tol, max_iter);
}

} // namespace fairprice
