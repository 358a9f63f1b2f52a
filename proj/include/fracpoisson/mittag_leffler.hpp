#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fracpoisson/common.hpp"

namespace fracpoisson {

// Parameter block for the Mittag-Leffler family
//   E_{alpha,beta}(z)        = sum_r z^r / Gamma(alpha r + beta)
//   E^gamma_{alpha,beta}(z)  = sum_j (gamma)^(j) z^j / (j! Gamma(alpha j + beta))
// where (gamma)^(j) = gamma (gamma+1) ... (gamma+j-1) is the rising factorial.
struct MLQuery {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double z = 0.0;

    void validate() const {
        detail::require_domain(std::isfinite(alpha) && alpha > 0.0,
                               "MLQuery: alpha must be > 0");
        detail::require_domain(std::isfinite(beta) && beta > 0.0,
                               "MLQuery: beta must be > 0");
        detail::require_domain(std::isfinite(gamma) && gamma >= 1.0,
                               "MLQuery: gamma must be >= 1");
        detail::require_domain(std::isfinite(z) && z >= 0.0,
                               "MLQuery: z must be >= 0 (negative arguments unsupported)");
    }
};

namespace detail {

// Series truncation: stop once the next term is below 1e-16 of the running sum
// for 3 consecutive terms while terms are decreasing; hard cap at 10000 terms.
inline constexpr int kMaxSeriesTerms = 10000;
inline constexpr double kSeriesRelTol = 1e-16;

// Use log-sum-exp summation once z^{1/alpha} exceeds this.
inline constexpr double kLogSumExpSwitch = 30.0;

// Use the large-argument asymptotic form once z^{1/alpha} exceeds this; the
// dropped remainder is O(exp(-z^{1/alpha})) relative, far below double eps.
inline constexpr double kAsymptoticSwitch = 200.0;

// log of the rising-factorial/j! weight of the generalized series; exactly 0
// for gamma == 1 so that the gamma=1 path is bit-for-bit the two-parameter one.
inline double log_series_weight(double gamma, int j) {
    if (gamma == 1.0) return 0.0;
    return std::lgamma(gamma + j) - std::lgamma(gamma) - std::lgamma(j + 1.0);
}

// Plain linear-scale summation; valid while terms cannot overflow (small z^{1/alpha}).
inline double ml_series_linear(double alpha, double beta, double gamma, double z) {
    const double logz = std::log(z);
    double sum = 0.0;
    double prev = kInf;
    int small_run = 0;
    for (int r = 0; r < kMaxSeriesTerms; ++r) {
        const double term =
            std::exp(log_series_weight(gamma, r) + r * logz - std::lgamma(alpha * r + beta));
        sum += term;
        small_run = (term < kSeriesRelTol * sum && term < prev) ? small_run + 1 : 0;
        if (small_run >= 3) return sum;
        prev = term;
    }
    throw std::runtime_error("mittag_leffler: series did not converge within the term cap");
}

// Streaming log-sum-exp over the series terms; returns log of the sum.
inline double ml_series_log(double alpha, double beta, double gamma, double z) {
    const double logz = std::log(z);
    double max_lt = -kInf;  // running maximum of the log-terms
    double scaled = 0.0;    // sum of exp(lt - max_lt)
    double prev = kInf;
    int small_run = 0;
    for (int r = 0; r < kMaxSeriesTerms; ++r) {
        const double lt =
            log_series_weight(gamma, r) + r * logz - std::lgamma(alpha * r + beta);
        if (lt > max_lt) {
            scaled = scaled * std::exp(max_lt - lt) + 1.0;
            max_lt = lt;
        } else {
            scaled += std::exp(lt - max_lt);
        }
        const double rel = lt - (max_lt + std::log(scaled));
        small_run = (rel < std::log(kSeriesRelTol) && lt < prev) ? small_run + 1 : 0;
        if (small_run >= 3) return max_lt + std::log(scaled);
        prev = lt;
    }
    throw std::runtime_error("mittag_leffler: series did not converge within the term cap");
}

// 1/Gamma(x) as sign and log magnitude; zero at the poles x = 0, -1, -2, ...
struct SignedLog {
    double log_abs;
    double sign;  // 0 when the value is exactly zero
};

inline SignedLog log_reciprocal_gamma(double x) {
    if (x > 0.0) return {-std::lgamma(x), 1.0};
    const double s = std::sin(std::numbers::pi * x);
    if (s == 0.0) return {-kInf, 0.0};
    // Reflection: 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi.
    const double la =
        std::log(std::abs(s)) - std::log(std::numbers::pi) + std::lgamma(1.0 - x);
    return {la, s > 0.0 ? 1.0 : -1.0};
}

// log E_{alpha,beta}(z) by the large-argument expansion
//   E_{alpha,beta}(z) ~ (1/alpha) z^{(1-beta)/alpha} e^{z^{1/alpha}}
//                       - sum_{k>=1} z^{-k} / Gamma(beta - alpha k),
// the algebraic correction being exponentially small relative to the leading
// term in the regime where this branch is selected.
inline double ml_log_asymptotic(double alpha, double beta, double z) {
    const double u = std::pow(z, 1.0 / alpha);
    const double logz = std::log(z);
    const double log_main = u + (1.0 - beta) / alpha * logz - std::log(alpha);
    double rel_corr = 0.0;  // correction terms divided by the leading term
    double prev_mag = kInf;
    for (int k = 1; k <= 50; ++k) {
        const SignedLog rg = log_reciprocal_gamma(beta - alpha * k);
        if (rg.sign == 0.0) continue;
        const double mag = -k * logz + rg.log_abs - log_main;
        if (mag >= prev_mag) break;  // asymptotic tail started to diverge
        rel_corr += rg.sign * std::exp(mag);
        prev_mag = mag;
    }
    return log_main + std::log1p(-rel_corr);
}

inline double log_ml_impl(double alpha, double beta, double gamma, double z) {
    if (z == 0.0) return log_series_weight(gamma, 0) - std::lgamma(beta);
    const double u = std::pow(z, 1.0 / alpha);
    if (gamma == 1.0 && u >= kAsymptoticSwitch) return ml_log_asymptotic(alpha, beta, z);
    if (u <= kLogSumExpSwitch) return std::log(ml_series_linear(alpha, beta, gamma, z));
    // No asymptotic form is kept for gamma != 1; reject clearly instead of
    // grinding through a series whose value overflows anyway.
    if (gamma != 1.0 && u > 705.0)
        throw std::range_error("generalized_mittag_leffler: result overflows double");
    return ml_series_log(alpha, beta, gamma, z);
}

}  // namespace detail

// log E_{alpha,beta}(z) (two-parameter function; q.gamma must be 1).
inline double log_mittag_leffler(const MLQuery& q) {
    q.validate();
    detail::require_domain(q.gamma == 1.0,
                           "log_mittag_leffler: gamma must be 1 (use generalized_mittag_leffler)");
    return detail::log_ml_impl(q.alpha, q.beta, 1.0, q.z);
}

// E_{alpha,beta}(z) in linear scale; throws range_error where it overflows.
inline double mittag_leffler(const MLQuery& q) {
    q.validate();
    detail::require_domain(q.gamma == 1.0,
                           "mittag_leffler: gamma must be 1 (use generalized_mittag_leffler)");
    if (q.z == 0.0) return std::exp(-std::lgamma(q.beta));
    if (std::pow(q.z, 1.0 / q.alpha) <= detail::kLogSumExpSwitch)
        return detail::ml_series_linear(q.alpha, q.beta, 1.0, q.z);
    const double lv = detail::log_ml_impl(q.alpha, q.beta, 1.0, q.z);
    if (lv > 709.0)
        throw std::range_error("mittag_leffler: value overflows double; use log_mittag_leffler");
    return std::exp(lv);
}

// E^gamma_{alpha,beta}(z); equals mittag_leffler bit-for-bit when gamma == 1.
inline double generalized_mittag_leffler(const MLQuery& q) {
    q.validate();
    if (q.z == 0.0) return std::exp(-std::lgamma(q.beta));
    if (std::pow(q.z, 1.0 / q.alpha) <= detail::kLogSumExpSwitch)
        return detail::ml_series_linear(q.alpha, q.beta, q.gamma, q.z);
    const double lv = detail::log_ml_impl(q.alpha, q.beta, q.gamma, q.z);
    if (lv > 709.0)
        throw std::range_error(
            "generalized_mittag_leffler: value overflows double; no log variant is exposed");
    return std::exp(lv);
}

// E_{nu,nu}(z) / E_{nu,1}(z), the factor appearing in the mean formula,
// computed as a log-space difference so large z cannot overflow. As z -> inf
// it tends to z^{(1-nu)/nu}.
inline double ml_ratio_nu_nu_over_nu_1(double nu, double z) {
    detail::require_domain(std::isfinite(nu) && nu > 0.0 && nu <= 1.0,
                           "ml_ratio: nu must lie in (0, 1]");
    detail::require_domain(std::isfinite(z) && z >= 0.0, "ml_ratio: z must be >= 0");
    const double num = detail::log_ml_impl(nu, nu, 1.0, z);
    const double den = detail::log_ml_impl(nu, 1.0, 1.0, z);
    return std::exp(num - den);
}

}  // namespace fracpoisson
