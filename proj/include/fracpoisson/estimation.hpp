#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "fracpoisson/common.hpp"
#include "fracpoisson/process.hpp"

namespace fracpoisson {

struct EstimatorResult {
    double nu_hat;         // extended real in [0, +inf]
    double observed_rate;  // s(M(t))/t
    int solver_iterations;
};

enum class TestDirection { upper, lower };

// Threshold test of H0: nu = nu0 against H1: nu = nu1 with critical region
// {V_t >= k} (upper, when nu1 > nu0) or {V_t <= k} (lower, when nu1 < nu0).
struct HypothesisTest {
    double nu0;
    double nu1;
    double k_threshold;
    TestDirection direction;

    HypothesisTest(double nu0_, double nu1_, double k_, TestDirection dir_)
        : nu0(nu0_), nu1(nu1_), k_threshold(k_), direction(dir_) {
        detail::require_config(std::isfinite(nu0) && nu0 > 0.0 && nu0 <= 1.0,
                               "HypothesisTest: nu0 must lie in (0, 1]");
        detail::require_config(std::isfinite(nu1) && nu1 > 0.0 && nu1 <= 1.0,
                               "HypothesisTest: nu1 must lie in (0, 1]");
        detail::require_config(nu0 != nu1, "HypothesisTest: nu1 must differ from nu0");
        detail::require_config(std::isfinite(k_threshold),
                               "HypothesisTest: threshold must be finite");
        if (nu1 > nu0) {
            detail::require_config(direction == TestDirection::upper && k_threshold >= nu0,
                                   "HypothesisTest: threshold must satisfy k >= nu0 with an "
                                   "upper critical region when nu1 > nu0");
        } else {
            detail::require_config(direction == TestDirection::lower && k_threshold <= nu0,
                                   "HypothesisTest: threshold must satisfy k <= nu0 with a "
                                   "lower critical region when nu1 < nu0");
        }
    }
};

// f_a(x) = (1/x) a^{1/x}, strictly decreasing on (0, inf) for a >= 1.
inline double f_a(double a, double x) {
    detail::require_domain(std::isfinite(a) && a >= 1.0, "f_a: requires a >= 1");
    detail::require_domain(std::isfinite(x) && x > 0.0, "f_a: requires x > 0");
    return (1.0 / x) * std::pow(a, 1.0 / x);
}

namespace detail {

// log f_a, safe where f_a itself would overflow.
inline double log_f_a(double a, double x) { return -std::log(x) + std::log(a) / x; }

// Bracketing + bisection inverse of f_a; returns (x, iterations).
inline std::pair<double, int> g_a_impl(double a, double y) {
    require_domain(std::isfinite(a) && a >= 1.0, "g_a: requires a >= 1");
    require_domain(!std::isnan(y) && y >= 0.0, "g_a: requires y >= 0");
    if (y == 0.0) return {kInf, 0};
    require_domain(std::isfinite(y), "g_a: requires finite y");

    const double log_y = std::log(y);
    double lo = 1e-6, hi = 64.0;
    int iterations = 0;
    // f_a is decreasing: enlarge the bracket geometrically until it straddles y.
    while (log_f_a(a, lo) < log_y && lo > 1e-300) {
        lo *= 0.5;
        ++iterations;
    }
    while (log_f_a(a, hi) > log_y && hi < 1e300) {
        hi *= 2.0;
        ++iterations;
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (log_f_a(a, mid) > log_y ? lo : hi) = mid;
        ++iterations;
        if (hi - lo <= 1e-15 * hi) break;
    }
    const double x = 0.5 * (lo + hi);
    if (std::abs(f_a(a, x) - y) > 1e-12 * std::max(1.0, y))
        throw std::runtime_error("g_a: bisection failed to reach tolerance");
    return {x, iterations};
}

}  // namespace detail

// Inverse of f_a: the unique x > 0 with f_a(x) = y; +inf for y = 0.
inline double g_a(double a, double y) { return detail::g_a_impl(a, y).first; }

// V_t = g_{s(lambda)}(s(M(t))/t); requires s(lambda) >= 1 so f is invertible.
inline EstimatorResult estimate_nu(const ModelParams& p, double t, std::int64_t observed_sum) {
    detail::require_domain(p.sum_lambda() >= 1.0,
                           "estimate_nu: estimator requires s(lambda) >= 1");
    detail::require_domain(std::isfinite(t) && t > 0.0, "estimate_nu: t must be > 0");
    detail::require_domain(observed_sum >= 0, "estimate_nu: observed_sum must be >= 0");
    const double rate = static_cast<double>(observed_sum) / t;
    const auto [nu_hat, iterations] = detail::g_a_impl(p.sum_lambda(), rate);
    return {nu_hat, rate, iterations};
}

// D(l1; l2) = l1 log(l1/l2) - l1 + l2 with 0 log 0 = 0; >= 0, zero iff l1 = l2.
inline double d_divergence(double l1, double l2) {
    detail::require_domain(!std::isnan(l1) && l1 >= 0.0, "d_divergence: requires l1 >= 0");
    detail::require_domain(std::isfinite(l2) && l2 > 0.0, "d_divergence: requires l2 > 0");
    if (l1 == 0.0) return l2;
    if (std::isinf(l1)) return kInf;
    return std::max(l1 * std::log(l1 / l2) - l1 + l2, 0.0);
}

// Estimator rate J_nu(nu_hat) = D((nu/nu_hat) s^{1/nu_hat}; s^{1/nu}):
// +inf for nu_hat < 0 (and at nu_hat = 0, where the first argument diverges
// since s >= 1), s^{1/nu} at nu_hat = +inf (the first argument tends to 0).
inline double rate_J(const ModelParams& p, double nu_true, double nu_hat) {
    detail::require_domain(p.sum_lambda() >= 1.0, "rate_J: requires s(lambda) >= 1");
    detail::require_domain(std::isfinite(nu_true) && nu_true > 0.0 && nu_true <= 1.0,
                           "rate_J: nu_true must lie in (0, 1]");
    detail::require_domain(!std::isnan(nu_hat), "rate_J: nu_hat must not be NaN");
    const double s = p.sum_lambda();
    const double l2 = std::pow(s, 1.0 / nu_true);
    if (nu_hat < 0.0) return kInf;
    if (nu_hat == 0.0) return kInf;
    if (std::isinf(nu_hat)) return l2;
    const double ratio = nu_true / nu_hat;
    const double l1 = ratio * std::pow(s, 1.0 / nu_hat);
    if (std::isinf(l1)) return kInf;
    const double value =
        l1 * (std::log(ratio) + (1.0 / nu_hat - 1.0 / nu_true) * std::log(s)) - l1 + l2;
    return std::max(value, 0.0);
}

// First-kind error exponent of the threshold test: J_{nu0}(k).
inline double first_kind_error_exponent(const ModelParams& p, const HypothesisTest& test) {
    detail::require_domain(p.sum_lambda() >= 1.0,
                           "first_kind_error_exponent: requires s(lambda) >= 1");
    return rate_J(p, test.nu0, test.k_threshold);
}

}  // namespace fracpoisson
