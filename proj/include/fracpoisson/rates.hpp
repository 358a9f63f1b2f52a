#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fracpoisson/common.hpp"
#include "fracpoisson/process.hpp"

namespace fracpoisson {

// A rate-function evaluation: the queried point, the rate value in [0, +inf],
// and (for the large-deviation rate) the maximizing theta, entries -inf where
// the supremum is approached in the limit.
struct RateEvaluation {
    std::vector<double> point;
    double value = 0.0;
    std::optional<std::vector<double>> maximizer;
};

struct LegendreConfig {
    int max_iterations = 200;
    double tolerance = 1e-11;
    double box_half_width = 40.0;
};

namespace detail {

inline void require_dimension(const ModelParams& p, const std::vector<double>& v,
                              const char* op) {
    require_domain(v.size() == p.m(), op);
}

inline void require_finite(const std::vector<double>& v, const char* op) {
    for (double e : v) require_domain(!std::isnan(e), op);
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

// Scaled-cumulant limit Lambda(theta) = (sum_i lambda_i e^{theta_i})^{1/nu} - s(lambda)^{1/nu}.
inline double lambda_limit(const ModelParams& p, const std::vector<double>& theta) {
    detail::require_dimension(p, theta, "lambda_limit: dimension mismatch");
    double tilted = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) tilted += p.lambda[i] * std::exp(theta[i]);
    const double inv_nu = 1.0 / p.nu;
    return std::pow(tilted, inv_nu) - std::pow(p.sum_lambda(), inv_nu);
}

// grad Lambda(theta)_i = (1/nu) (sum_j lambda_j e^{theta_j})^{1/nu - 1} lambda_i e^{theta_i}.
inline std::vector<double> lambda_limit_gradient(const ModelParams& p,
                                                 const std::vector<double>& theta) {
    detail::require_dimension(p, theta, "lambda_limit_gradient: dimension mismatch");
    double tilted = 0.0;
    std::vector<double> a(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        a[i] = p.lambda[i] * std::exp(theta[i]);
        tilted += a[i];
    }
    const double inv_nu = 1.0 / p.nu;
    const double scale = inv_nu * std::pow(tilted, inv_nu - 1.0);
    for (double& e : a) e *= scale;
    return a;
}

// grad Lambda(0) = (1/nu) s(lambda)^{1/nu - 1} lambda: the zero of the rate function.
inline std::vector<double> grad_lambda_zero(const ModelParams& p) {
    const double scale = std::pow(p.sum_lambda(), 1.0 / p.nu - 1.0) / p.nu;
    std::vector<double> out(p.m());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * p.lambda[i];
    return out;
}

// Univariate rate I^{(A)}_{nu,lam}(y) = y log((nu y)^nu / lam) - nu y + lam^{1/nu}
// for y >= 0 (+inf for y < 0). Governs the total count s(M(t))/t; also the
// m = 1 rate. Term assembly matches rate_ld so the m = 1 reduction is exact.
inline double rate_ld_univariate(double nu, double lam, double y) {
    detail::require_domain(std::isfinite(nu) && nu > 0.0 && nu <= 1.0,
                           "rate_ld_univariate: nu must lie in (0, 1]");
    detail::require_domain(std::isfinite(lam) && lam > 0.0,
                           "rate_ld_univariate: lam must be > 0");
    detail::require_domain(!std::isnan(y), "rate_ld_univariate: y must not be NaN");
    if (y < 0.0) return kInf;
    if (y == 0.0) return std::pow(lam, 1.0 / nu);
    if (std::isinf(y)) return kInf;
    const double theta =
        nu * std::log(nu) - std::log(lam) + std::log(y) - (1.0 - nu) * std::log(y);
    return std::max(y * theta - nu * y + std::pow(lam, 1.0 / nu), 0.0);
}

// Legendre transform of Lambda in closed form:
//   Lambda*(x) = sum_i x_i log[(nu^nu/lambda_i) x_i / s(x)^{1-nu}] - nu s(x) + s(lambda)^{1/nu}
// on [0, inf)^m with 0 log 0 = 0, +inf off the orthant, and maximizer
// theta_i(x) = log[(nu^nu/lambda_i) x_i / s(x)^{1-nu}] (-inf where x_i = 0).
inline RateEvaluation rate_ld(const ModelParams& p, const std::vector<double>& x) {
    detail::require_dimension(p, x, "rate_ld: dimension mismatch");
    detail::require_finite(x, "rate_ld: x must not contain NaN");
    RateEvaluation out{x, 0.0, std::nullopt};
    for (double xi : x) {
        if (xi < 0.0) {
            out.value = kInf;
            return out;
        }
        if (std::isinf(xi)) {
            out.value = kInf;
            return out;
        }
    }
    double sx = 0.0;
    for (double xi : x) sx += xi;

    std::vector<double> maximizer(p.m(), -kInf);
    if (sx == 0.0) {
        out.value = std::pow(p.sum_lambda(), 1.0 / p.nu);
        out.maximizer = std::move(maximizer);
        return out;
    }
    const double log_sx = std::log(sx);
    double value = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) continue;  // 0 log 0 = 0 by explicit branch
        const double theta = p.nu * std::log(p.nu) - std::log(p.lambda[i]) +
                             std::log(x[i]) - (1.0 - p.nu) * log_sx;
        maximizer[i] = theta;
        value += x[i] * theta;
    }
    value = value - p.nu * sx + std::pow(p.sum_lambda(), 1.0 / p.nu);
    out.value = std::max(value, 0.0);
    out.maximizer = std::move(maximizer);
    return out;
}

// Same rate written as s(x) H(x/s(x); lambda/s(lambda)) + I^{(A)}_{nu,s(lambda)}(s(x)),
// the relative-entropy decomposition.
inline double rate_ld_entropy_form(const ModelParams& p, const std::vector<double>& x) {
    detail::require_dimension(p, x, "rate_ld_entropy_form: dimension mismatch");
    for (double xi : x)
        detail::require_domain(xi >= 0.0, "rate_ld_entropy_form: x must be >= 0");
    double sx = 0.0;
    for (double xi : x) sx += xi;
    if (sx == 0.0) return rate_ld_univariate(p.nu, p.sum_lambda(), 0.0);
    double entropy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) continue;
        const double pi = x[i] / sx;
        const double qi = p.lambda[i] / p.sum_lambda();
        entropy += pi * std::log(pi / qi);
    }
    return sx * entropy + rate_ld_univariate(p.nu, p.sum_lambda(), sx);
}

namespace detail {

// One Newton solve of the stationarity system grad Lambda(theta) = x for
// x in the open orthant; Hessian is PD so damped Newton is globally safe.
inline double legendre_stationarity_solve(const ModelParams& p, const std::vector<double>& x,
                                          const LegendreConfig& cfg) {
    const auto m = static_cast<Eigen::Index>(p.m());
    const Eigen::VectorXd xv = to_eigen(x);
    const Eigen::VectorXd lam = to_eigen(p.lambda);
    const double inv_nu = 1.0 / p.nu;

    const auto residual = [&](const Eigen::VectorXd& th, Eigen::VectorXd& a, double& tilted) {
        a = (lam.array() * th.array().exp()).matrix();
        tilted = a.sum();
        return (inv_nu * std::pow(tilted, inv_nu - 1.0) * a - xv).eval();
    };

    Eigen::VectorXd th = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd a(m);
    double tilted = 0.0;
    Eigen::VectorXd f = residual(th, a, tilted);
    const double tol = cfg.tolerance * std::max(1.0, xv.cwiseAbs().maxCoeff());

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        if (f.cwiseAbs().maxCoeff() <= tol) {
            double dot = 0.0;
            std::vector<double> thv(th.data(), th.data() + m);
            for (Eigen::Index i = 0; i < m; ++i) dot += th(i) * xv(i);
            return dot - lambda_limit(p, thv);
        }
        const Eigen::MatrixXd hess =
            inv_nu * (inv_nu - 1.0) * std::pow(tilted, inv_nu - 2.0) * (a * a.transpose()) +
            inv_nu * std::pow(tilted, inv_nu - 1.0) *
                Eigen::MatrixXd(a.asDiagonal());
        const Eigen::VectorXd step = hess.ldlt().solve(-f);
        double alpha = 1.0;
        const double f_norm = f.cwiseAbs().maxCoeff();
        bool advanced = false;
        for (int halving = 0; halving < 60; ++halving) {
            Eigen::VectorXd a_new(m);
            double tilted_new = 0.0;
            const Eigen::VectorXd th_new = th + alpha * step;
            const Eigen::VectorXd f_new = residual(th_new, a_new, tilted_new);
            if (f_new.cwiseAbs().maxCoeff() < f_norm) {
                th = th_new;
                a = a_new;
                tilted = tilted_new;
                f = f_new;
                advanced = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!advanced)
            throw std::runtime_error(
                "legendre_oracle: damped Newton stalled before reaching tolerance");
    }
    throw std::runtime_error("legendre_oracle: stationarity solve did not converge");
}

// Cyclic coordinate ascent of <theta,x> - Lambda(theta) over a box. Each
// coordinate update maximizes exactly along its axis: the partial derivative
// x_i - (1/nu) A^{1/nu-1} lambda_i e^{theta_i} is strictly decreasing in
// theta_i, so a sign check at the box edges plus bisection suffices.
inline double legendre_box_ascent(const ModelParams& p, const std::vector<double>& x,
                                  double lo, double hi) {
    const std::size_t m = p.m();
    const double inv_nu = 1.0 / p.nu;
    std::vector<double> th(m, 0.0);

    const auto partial = [&](std::size_t i, double ti) {
        double tilted = p.lambda[i] * std::exp(ti);
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) tilted += p.lambda[j] * std::exp(th[j]);
        return x[i] - inv_nu * std::pow(tilted, inv_nu - 1.0) * p.lambda[i] * std::exp(ti);
    };

    for (int sweep = 0; sweep < 500; ++sweep) {
        double shift = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double updated;
            if (partial(i, lo) <= 0.0) {
                updated = lo;
            } else if (partial(i, hi) >= 0.0) {
                updated = hi;
            } else {
                double a = lo, b = hi;
                for (int iter = 0; iter < 200; ++iter) {
                    const double mid = 0.5 * (a + b);
                    (partial(i, mid) > 0.0 ? a : b) = mid;
                }
                updated = 0.5 * (a + b);
            }
            shift = std::max(shift, std::abs(updated - th[i]));
            th[i] = updated;
        }
        if (shift < 1e-12) break;
    }
    double value = 0.0;
    for (std::size_t i = 0; i < m; ++i) value += th[i] * x[i];
    return value - lambda_limit(p, th);
}

}  // namespace detail

// Independent numerical Legendre transform sup_theta {<theta,x> - Lambda(theta)}
// used to cross-validate rate_ld. Positive-orthant points go through a
// stationarity solve; boundary points through box-constrained ascent; points
// with negative components make the objective grow without bound, reported as
// +inf once the achieved value exceeds 1e10 under box widening.
inline double legendre_oracle(const ModelParams& p, const std::vector<double>& x,
                              const LegendreConfig& cfg = {}) {
    detail::require_dimension(p, x, "legendre_oracle: dimension mismatch");
    detail::require_finite(x, "legendre_oracle: x must not contain NaN");
    bool all_positive = true;
    bool any_negative = false;
    for (double xi : x) {
        all_positive = all_positive && xi > 0.0;
        any_negative = any_negative || xi < 0.0;
    }
    if (all_positive) return detail::legendre_stationarity_solve(p, x, cfg);

    double lo = -cfg.box_half_width;
    const double hi = cfg.box_half_width;
    double value = detail::legendre_box_ascent(p, x, lo, hi);
    if (!any_negative) return value;  // zero components: sup reached as theta_i -> -inf
    for (int round = 0; round < 14; ++round) {
        lo *= 10.0;
        const double wider = detail::legendre_box_ascent(p, x, lo, hi);
        if (wider > 1e10) return kInf;
        if (wider - value < 1e-9) return wider;
        value = wider;
    }
    return kInf;
}

// Moderate-deviation rate for an explicit covariance matrix. Positive definite
// C (smallest eigenvalue > 1e-10 * largest) uses the LDLT solve of the
// quadratic form; otherwise the supremum sup_theta {<theta,x> - <theta,C theta>/2}
// is evaluated in the eigenbasis: +inf as soon as x has a component along a
// null direction (never a pseudo-inverse, which would silently report a
// finite value there).
inline double rate_md_from_matrix(const Eigen::MatrixXd& c, const std::vector<double>& x) {
    detail::require_domain(c.rows() == c.cols(), "rate_md: C must be square");
    detail::require_domain(static_cast<std::size_t>(c.rows()) == x.size(),
                           "rate_md: dimension mismatch");
    detail::require_finite(x, "rate_md: x must not contain NaN");
    const Eigen::VectorXd xv = detail::to_eigen(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    const Eigen::VectorXd values = eig.eigenvalues();
    const double largest = values.cwiseAbs().maxCoeff();
    if (largest > 0.0 && values.minCoeff() > 1e-10 * largest)
        return 0.5 * xv.dot(c.ldlt().solve(xv));

    const Eigen::VectorXd coords = eig.eigenvectors().transpose() * xv;
    const double null_tol = 1e-10 * std::max(largest, 1.0);
    double value = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) > null_tol) {
            value += coords(i) * coords(i) / (2.0 * values(i));
        } else if (std::abs(coords(i)) > 1e-12 * std::max(1.0, xv.norm())) {
            return kInf;
        }
    }
    return value;
}

inline double rate_md(const ModelParams& p, const std::vector<double>& x) {
    return rate_md_from_matrix(covariance_matrix_C(p).entries, x);
}

// inf{ Lambda*(x) : <u,x> >= c }. If grad Lambda(0) already satisfies the
// constraint the infimum is 0 there; otherwise strong duality for the convex
// rate gives inf = sup_{mu >= 0} {mu c - Lambda(mu u)}, with the inner
// stationarity condition c = <u, grad Lambda(mu u)> solved by bisection (the
// map is decreasing in mu). The minimizer is x* = grad Lambda(mu* u).
inline RateEvaluation ld_halfspace_rate(const ModelParams& p, const std::vector<double>& u,
                                        double c) {
    detail::require_dimension(p, u, "ld_halfspace_rate: dimension mismatch");
    detail::require_finite(u, "ld_halfspace_rate: u must not contain NaN");
    detail::require_domain(!std::isnan(c), "ld_halfspace_rate: c must not be NaN");

    const auto dot_with_u = [&](const std::vector<double>& v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) acc += u[i] * v[i];
        return acc;
    };
    const auto scaled_u = [&](double mu) {
        std::vector<double> th(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) th[i] = mu * u[i];
        return th;
    };

    const auto mean_direction = grad_lambda_zero(p);
    if (dot_with_u(mean_direction) >= c) return {mean_direction, 0.0, std::nullopt};

    // phi'(mu) = c - <u, grad Lambda(mu u)>; phi'(0) > 0 here.
    const auto phi_prime = [&](double mu) {
        return c - dot_with_u(lambda_limit_gradient(p, scaled_u(mu)));
    };
    double lo = 0.0, hi = 1.0;
    bool bracketed = false;
    for (int round = 0; round < 80; ++round) {
        if (phi_prime(hi) < 0.0) {
            bracketed = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if (!bracketed) return {{}, kInf, std::nullopt};  // constraint unreachable
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (phi_prime(mid) > 0.0 ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    const auto minimizer = lambda_limit_gradient(p, scaled_u(mu));
    auto eval = rate_ld(p, minimizer);
    return eval;
}

// inf{ <x, C^{-1} x>/2 : <u,x> >= c }: 0 when c <= 0, else c^2/(2 u^T C u)
// attained at x* = (c / u^T C u) C u.
inline double md_halfspace_rate(const ModelParams& p, const std::vector<double>& u, double c) {
    detail::require_dimension(p, u, "md_halfspace_rate: dimension mismatch");
    detail::require_finite(u, "md_halfspace_rate: u must not contain NaN");
    if (c <= 0.0) return 0.0;
    const Eigen::VectorXd uv = detail::to_eigen(u);
    const double quad = uv.dot(covariance_matrix_C(p).entries * uv);
    if (!(quad > 0.0)) return kInf;
    return c * c / (2.0 * quad);
}

}  // namespace fracpoisson
