#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fracpoisson/common.hpp"
#include "fracpoisson/mittag_leffler.hpp"

namespace fracpoisson {

// Full parameterization of the process: fractional order nu in (0,1] and a
// strictly positive intensity vector lambda (one entry per component).
struct ModelParams {
    double nu;
    std::vector<double> lambda;

    ModelParams(double nu_, std::vector<double> lambda_)
        : nu(nu_), lambda(std::move(lambda_)) {
        detail::require_domain(std::isfinite(nu) && nu > 0.0 && nu <= 1.0,
                               "ModelParams: nu must lie in (0, 1]");
        detail::require_domain(!lambda.empty(), "ModelParams: lambda must be non-empty");
        for (double l : lambda)
            detail::require_domain(std::isfinite(l) && l > 0.0,
                                   "ModelParams: every lambda_i must be > 0");
        sum_lambda_ = std::accumulate(lambda.begin(), lambda.end(), 0.0);
    }

    std::size_t m() const { return lambda.size(); }
    double sum_lambda() const { return sum_lambda_; }

  private:
    double sum_lambda_;
};

// A vector of m non-negative counts together with its total.
struct LatticePoint {
    std::vector<std::int64_t> k;
    std::int64_t sum;

    explicit LatticePoint(std::vector<std::int64_t> k_) : k(std::move(k_)), sum(0) {
        detail::require_domain(!k.empty(), "LatticePoint: k must be non-empty");
        for (auto v : k) {
            detail::require_domain(v >= 0, "LatticePoint: counts must be >= 0");
            sum += v;
        }
    }
};

// Symmetric m x m matrix C with entries
//   c_jk = (1/nu)(1/nu - 1) s(lambda)^{1/nu - 2} lambda_j lambda_k   (j != k)
// plus (1/nu) s(lambda)^{1/nu - 1} lambda_j on the diagonal.
struct CovarianceMatrix {
    Eigen::MatrixXd entries;
};

namespace detail {

inline void require_time(double t) {
    require_domain(std::isfinite(t) && t > 0.0, "t must be > 0");
}

// The Mittag-Leffler argument s(lambda) * t^nu.
inline double ml_argument(const ModelParams& p, double t) {
    return p.sum_lambda() * std::pow(t, p.nu);
}

}  // namespace detail

// log P(s(M(t)) = h) = h log(s t^nu) - log Gamma(nu h + 1) - log E_{nu,1}(s t^nu).
inline double marginal_sum_log_pmf(const ModelParams& p, double t, std::int64_t h) {
    detail::require_time(t);
    detail::require_domain(h >= 0, "marginal_sum_log_pmf: h must be >= 0");
    const double w = detail::ml_argument(p, t);
    const double hh = static_cast<double>(h);
    return hh * std::log(w) - std::lgamma(p.nu * hh + 1.0) -
           log_mittag_leffler({p.nu, 1.0, 1.0, w});
}

// log of the multinomial split s(k)!/(k_1! ... k_m!) prod (lambda_i/s(lambda))^{k_i};
// depends on neither t nor nu.
inline double conditional_multinomial_log_pmf(const ModelParams& p, const LatticePoint& k) {
    detail::require_domain(k.k.size() == p.m(), "conditional_multinomial_log_pmf: dimension mismatch");
    double out = std::lgamma(static_cast<double>(k.sum) + 1.0);
    for (std::size_t i = 0; i < k.k.size(); ++i) {
        const double ki = static_cast<double>(k.k[i]);
        out -= std::lgamma(ki + 1.0);
        out += ki * std::log(p.lambda[i] / p.sum_lambda());
    }
    return out;
}

// Joint pmf in one closed form,
//   log [ s(k)!/(prod k_i!) prod lambda_i^{k_i} t^{nu s(k)} / Gamma(nu s(k)+1) / E_{nu,1}(s t^nu) ],
// assembled independently of the conditional-times-marginal factorization.
inline double joint_log_pmf(const ModelParams& p, double t, const LatticePoint& k) {
    detail::require_time(t);
    detail::require_domain(k.k.size() == p.m(), "joint_log_pmf: dimension mismatch");
    const double s = static_cast<double>(k.sum);
    double out = std::lgamma(s + 1.0);
    for (std::size_t i = 0; i < k.k.size(); ++i) {
        const double ki = static_cast<double>(k.k[i]);
        out -= std::lgamma(ki + 1.0);
        out += ki * std::log(p.lambda[i]);
    }
    out += p.nu * s * std::log(t);
    out -= std::lgamma(p.nu * s + 1.0);
    out -= log_mittag_leffler({p.nu, 1.0, 1.0, detail::ml_argument(p, t)});
    return out;
}

// Weighted-Poisson weight w(h) = h! / Gamma(nu h + 1); exactly 1 when nu = 1.
inline double weight_function(const ModelParams& p, std::int64_t h) {
    detail::require_domain(h >= 0, "weight_function: h must be >= 0");
    const double hh = static_cast<double>(h);
    return std::exp(std::lgamma(hh + 1.0) - std::lgamma(p.nu * hh + 1.0));
}

// log E[exp(<theta, M(t)>)] = log E_{nu,1}((sum_i lambda_i e^{theta_i}) t^nu)
//                           - log E_{nu,1}(s(lambda) t^nu).
inline double log_mgf(const ModelParams& p, double t, const std::vector<double>& theta) {
    detail::require_time(t);
    detail::require_domain(theta.size() == p.m(), "log_mgf: dimension mismatch");
    double tilted = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) tilted += p.lambda[i] * std::exp(theta[i]);
    const double tpow = std::pow(t, p.nu);
    return log_mittag_leffler({p.nu, 1.0, 1.0, tilted * tpow}) -
           log_mittag_leffler({p.nu, 1.0, 1.0, p.sum_lambda() * tpow});
}

inline double mgf(const ModelParams& p, double t, const std::vector<double>& theta) {
    const double lv = log_mgf(p, t, theta);
    if (lv > 709.0) throw std::range_error("mgf: value overflows double; use log_mgf");
    return std::exp(lv);
}

// E[M(t)] = [E_{nu,nu}(s t^nu) / E_{nu,1}(s t^nu)] (t^nu / nu) lambda.
inline std::vector<double> mean_vector(const ModelParams& p, double t) {
    detail::require_time(t);
    const double tpow = std::pow(t, p.nu);
    const double factor =
        ml_ratio_nu_nu_over_nu_1(p.nu, p.sum_lambda() * tpow) * tpow / p.nu;
    std::vector<double> out(p.m());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * p.lambda[i];
    return out;
}

inline CovarianceMatrix covariance_matrix_C(const ModelParams& p) {
    const double inv_nu = 1.0 / p.nu;
    const double s = p.sum_lambda();
    const double off = inv_nu * (inv_nu - 1.0) * std::pow(s, inv_nu - 2.0);
    const double diag = inv_nu * std::pow(s, inv_nu - 1.0);
    const auto m = static_cast<Eigen::Index>(p.m());
    CovarianceMatrix c{Eigen::MatrixXd(m, m)};
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index k = 0; k < m; ++k) {
            const double lj = p.lambda[static_cast<std::size_t>(j)];
            const double lk = p.lambda[static_cast<std::size_t>(k)];
            // off * (lj * lk) so the (j,k) and (k,j) entries round identically
            c.entries(j, k) = off * (lj * lk) + (j == k ? diag * lj : 0.0);
        }
    return c;
}

// Smallest H with a certified marginal tail sum below eps: beyond H the
// term ratio rho_h = P(s=h+1)/P(s=h) stays <= 1/2 (it is decreasing in h), so
// sum_{h > H} P(s=h) <= 2 P(s=H+1), and that bound is checked explicitly.
inline std::int64_t truncation_bound(const ModelParams& p, double t, double eps = 1e-12) {
    detail::require_time(t);
    detail::require_domain(eps > 0.0, "truncation_bound: eps must be > 0");
    const double w = detail::ml_argument(p, t);
    const double logw = std::log(w);
    const double log_e = log_mittag_leffler({p.nu, 1.0, 1.0, w});
    const double log_half = std::log(0.5);
    for (std::int64_t h = 0; h < (1 << 24); ++h) {
        const double hh = static_cast<double>(h);
        // log of P(s=h+1)/P(s=h)
        const double log_ratio =
            logw + std::lgamma(p.nu * hh + 1.0) - std::lgamma(p.nu * hh + p.nu + 1.0);
        if (log_ratio > log_half) continue;
        const double log_next =
            (hh + 1.0) * logw - std::lgamma(p.nu * (hh + 1.0) + 1.0) - log_e;
        if (std::log(2.0) + log_next < std::log(eps)) return h;
    }
    throw std::runtime_error("truncation_bound: no certified bound found");
}

}  // namespace fracpoisson
