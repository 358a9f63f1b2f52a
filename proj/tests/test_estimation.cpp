#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fracpoisson/estimation.hpp"
#include "fracpoisson/rates.hpp"
#include "fracpoisson/sampling.hpp"

using namespace fracpoisson;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("f_a evaluation and monotonicity") {
    CHECK(f_a(1.5, 1.0) == 1.5);
    CHECK(f_a(1.0, 2.0) == 0.5);
    CHECK(f_a(1.5, 0.3) > f_a(1.5, 0.7));
    CHECK(f_a(1.5, 0.7) > f_a(1.5, 1.0));

    CHECK_THROWS_AS(f_a(0.99, 1.0), std::domain_error);
    CHECK_THROWS_AS(f_a(1.5, 0.0), std::domain_error);
    CHECK_THROWS_AS(f_a(1.5, -1.0), std::domain_error);
}

TEST_CASE("g_a inversion") {
    SECTION("fixed point and sentinel") {
        CHECK_THAT(g_a(1.5, 1.5), WithinAbs(1.0, 1e-10));
        CHECK(g_a(1.5, 0.0) == kInf);
        CHECK_THROWS_AS(g_a(1.5, -0.5), std::domain_error);
        CHECK_THROWS_AS(g_a(0.9, 1.0), std::domain_error);
    }

    SECTION("round trips across a wide grid") {
        for (double a : {1.0, 1.5, 3.0, 10.0}) {
            for (double x = 0.05; x <= 20.0; x *= 1.45) {
                const double y = f_a(a, x);
                const double back = g_a(a, y);
                INFO("a = " << a << ", x = " << x);
                CHECK_THAT(back, WithinAbs(x, 1e-10));
                CHECK(std::abs(f_a(a, back) - y) <= 1e-12 * std::max(1.0, y));
            }
        }
    }
}

TEST_CASE("nu estimator") {
    const ModelParams p(0.7, {0.6, 0.9});

    SECTION("precondition and sentinels") {
        CHECK_THROWS_AS(estimate_nu(ModelParams(0.7, {0.3, 0.3}), 2.0, 5),
                        std::domain_error);
        const auto res = estimate_nu(p, 200.0, 0);
        CHECK(res.nu_hat == kInf);
        CHECK(res.observed_rate == 0.0);
    }

    SECTION("exact at the consistency point") {
        // t chosen so observed_sum / t equals f_{s(lambda)}(0.7) exactly.
        const std::int64_t observed = 510;
        const double t = static_cast<double>(observed) / f_a(1.5, 0.7);
        const auto res = estimate_nu(p, t, observed);
        CHECK_THAT(res.nu_hat, WithinAbs(0.7, 1e-9));
        CHECK(res.solver_iterations > 0);
    }

    SECTION("Monte Carlo consistency at t = 200") {
        const double t = 200.0;
        const MarginalSampler sampler(p, t);
        SplitMix64 rng(split_key(42, 5));
        std::vector<double> abs_errors;
        for (int rep = 0; rep < 1000; ++rep) {
            const auto res = estimate_nu(p, t, sampler.draw(rng));
            abs_errors.push_back(std::abs(res.nu_hat - 0.7));
        }
        std::nth_element(abs_errors.begin(), abs_errors.begin() + 500, abs_errors.end());
        CHECK(abs_errors[500] <= 0.05);
    }
}

TEST_CASE("divergence function D") {
    CHECK(d_divergence(2.0, 2.0) == 0.0);
    CHECK(d_divergence(0.0, 2.0) == 2.0);
    CHECK_THAT(d_divergence(3.0, 1.5),
               WithinAbs(0.57944154167983592825169636437452970422650040308077, 1e-15));
    CHECK(d_divergence(kInf, 2.0) == kInf);
    CHECK_THROWS_AS(d_divergence(-0.1, 2.0), std::domain_error);
    CHECK_THROWS_AS(d_divergence(1.0, 0.0), std::domain_error);
}

TEST_CASE("estimator rate J") {
    const ModelParams p(0.7, {0.6, 0.9});

    SECTION("boundary values") {
        CHECK(rate_J(p, 0.7, 0.7) == 0.0);
        CHECK(rate_J(p, 0.7, -0.2) == kInf);
        CHECK(rate_J(p, 0.7, 0.0) == kInf);
        CHECK(rate_J(p, 0.7, kInf) == std::pow(1.5, 1.0 / 0.7));
        CHECK_THROWS_AS(rate_J(ModelParams(0.7, {0.4, 0.4}), 0.7, 0.9), std::domain_error);
    }

    SECTION("frozen oracle value") {
        const ModelParams q(0.6, {0.6, 0.9});
        CHECK_THAT(rate_J(q, 0.6, 0.75),
                   WithinAbs(0.099719559360769935008622053023844968267920485043018, 1e-14));
    }

    SECTION("equals the D-divergence composition") {
        for (double nu_hat = 0.2; nu_hat <= 1.5; nu_hat += 0.1) {
            const double composed = d_divergence(
                (0.7 / nu_hat) * std::pow(1.5, 1.0 / nu_hat), std::pow(1.5, 1.0 / 0.7));
            INFO("nu_hat = " << nu_hat);
            CHECK_THAT(rate_J(p, 0.7, nu_hat), WithinAbs(composed, 1e-12));
        }
    }

    SECTION("equals the contraction of the LD rate along the lambda ray") {
        // {V = nu_hat} corresponds to {s(x) = f(nu_hat)}; the minimizing x is
        // proportional to lambda, so J(nu_hat) = Lambda*((f(nu_hat)/s) lambda).
        for (double nu_hat = 0.2; nu_hat <= 1.5; nu_hat += 0.1) {
            const double target_sum = f_a(1.5, nu_hat);
            const std::vector<double> x{target_sum * 0.6 / 1.5, target_sum * 0.9 / 1.5};
            INFO("nu_hat = " << nu_hat);
            CHECK_THAT(rate_J(p, 0.7, nu_hat), WithinAbs(rate_ld(p, x).value, 1e-8));
            // Off-ray points on the same slice {s(x) = f(nu_hat)} do no better.
            for (double shift : {-0.2, 0.15}) {
                const double x0 = std::max(x[0] + shift * target_sum, 0.0);
                const std::vector<double> off{x0, target_sum - x0};
                CHECK(rate_ld(p, off).value >= rate_J(p, 0.7, nu_hat) - 1e-10);
            }
        }
    }

    SECTION("nonnegative with a unique zero and monotone growth away from nu") {
        double previous_below = kInf;
        for (double k : {0.1, 0.2, 0.3, 0.4, 0.5}) {
            const double value = rate_J(p, 0.7, k);
            CHECK(value > 0.0);
            CHECK(value < previous_below);  // decreasing toward nu from below
            previous_below = value;
        }
        double previous_above = 0.0;
        for (double k : {0.8, 0.9, 1.0, 1.1, 1.2, 1.3}) {
            const double value = rate_J(p, 0.7, k);
            CHECK(value > previous_above);  // increasing past nu
            previous_above = value;
        }
        CHECK(rate_J(p, 0.7, 0.7) <= 1e-12);
    }

    SECTION("bad-estimate exponent is positive") {
        CHECK_THAT(rate_J(p, 0.7, 1.0),
                   WithinAbs(0.17770619444223615330875709874899393565171918945057, 1e-14));
    }
}

TEST_CASE("hypothesis test configuration") {
    const ModelParams p(0.6, {0.6, 0.9});

    SECTION("valid configurations evaluate J at the threshold") {
        const HypothesisTest upper(0.6, 0.9, 0.75, TestDirection::upper);
        CHECK_THAT(first_kind_error_exponent(p, upper),
                   WithinAbs(0.099719559360769935008622053023844968267920485043018, 1e-14));

        const HypothesisTest degenerate(0.6, 0.9, 0.6, TestDirection::upper);
        CHECK(first_kind_error_exponent(p, degenerate) == 0.0);

        const ModelParams q(0.8, {0.6, 0.9});
        const HypothesisTest lower(0.8, 0.5, 0.65, TestDirection::lower);
        CHECK_THAT(first_kind_error_exponent(q, lower),
                   WithinAbs(0.1088970699205235811090944148125639934755459531412, 1e-14));
    }

    SECTION("misconfigured thresholds are rejected") {
        CHECK_THROWS_AS(HypothesisTest(0.6, 0.9, 0.5, TestDirection::upper),
                        std::invalid_argument);
        CHECK_THROWS_AS(HypothesisTest(0.6, 0.9, 0.75, TestDirection::lower),
                        std::invalid_argument);
        CHECK_THROWS_AS(HypothesisTest(0.8, 0.5, 0.9, TestDirection::lower),
                        std::invalid_argument);
        CHECK_THROWS_AS(HypothesisTest(0.6, 0.6, 0.75, TestDirection::upper),
                        std::invalid_argument);
        CHECK_THROWS_AS(HypothesisTest(1.2, 0.6, 0.9, TestDirection::lower),
                        std::invalid_argument);
    }
}
