#include <catch2/catch_amalgamated.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <vector>

#include "fracpoisson/sampling.hpp"

using namespace fracpoisson;

TEST_CASE("seed determinism and stream splitting") {
    const ModelParams p(0.7, {0.6, 0.9});
    const auto a = make_sample_batch(p, 2.0, 42, 300);
    const auto b = make_sample_batch(p, 2.0, 42, 300);
    REQUIRE(a.draws.size() == b.draws.size());
    for (std::size_t i = 0; i < a.draws.size(); ++i) CHECK(a.draws[i].k == b.draws[i].k);

    const auto c = make_sample_batch(p, 2.0, 43, 300);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.draws.size(); ++i)
        any_difference = any_difference || (a.draws[i].k != c.draws[i].k);
    CHECK(any_difference);

    CHECK(split_key(42, 0) != split_key(42, 1));
    CHECK(split_key(42, 0) != split_key(43, 0));
    // Chained splits reproduce.
    CHECK(split_key(split_key(7, 3), 11) == split_key(split_key(7, 3), 11));
}

TEST_CASE("sum sampler matches the Poisson special case") {
    const ModelParams p(1.0, {0.6, 0.9});
    const MarginalSampler sampler(p, 2.0);
    SplitMix64 rng(split_key(42, 0));
    const int n = 50000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += static_cast<double>(sampler.draw(rng));
    const double mean = acc / n;
    CHECK(std::abs(mean - 3.0) < 3.0 * std::sqrt(3.0 / n));
}

TEST_CASE("sum sampler passes a chi-square GOF test against the marginal pmf") {
    const ModelParams p(0.7, {0.6, 0.9});
    const double t = 2.0;
    const MarginalSampler sampler(p, t);
    SplitMix64 rng(split_key(42, 1));
    const int n = 50000;

    std::map<std::int64_t, std::int64_t> observed;
    for (int i = 0; i < n; ++i) ++observed[sampler.draw(rng)];

    // Individual bins while expected count >= 5, one pooled bin for the rest.
    double chi2 = 0.0;
    double expected_used = 0.0;
    std::int64_t observed_used = 0;
    int bins = 0;
    for (std::int64_t h = 0;; ++h) {
        const double expected = n * std::exp(marginal_sum_log_pmf(p, t, h));
        if (expected < 5.0) break;
        const auto it = observed.find(h);
        const double obs = it == observed.end() ? 0.0 : static_cast<double>(it->second);
        chi2 += (obs - expected) * (obs - expected) / expected;
        expected_used += expected;
        observed_used += static_cast<std::int64_t>(obs);
        ++bins;
    }
    const double tail_expected = n - expected_used;
    const double tail_observed = static_cast<double>(n - observed_used);
    REQUIRE(tail_expected > 0.0);
    chi2 += (tail_observed - tail_expected) * (tail_observed - tail_expected) / tail_expected;
    ++bins;

    const boost::math::chi_squared_distribution<double> dist(bins - 1);
    const double p_value = boost::math::cdf(boost::math::complement(dist, chi2));
    INFO("chi2 = " << chi2 << " with " << bins - 1 << " dof");
    CHECK(p_value > 0.001);
}

TEST_CASE("vector sampler respects the two-stage law") {
    const ModelParams p(0.7, {0.6, 0.9});
    const double t = 2.0;
    const auto batch = make_sample_batch(p, t, 42, 50000);
    const auto n = static_cast<double>(batch.draws.size());

    SECTION("split conserves the total") {
        for (std::size_t i = 0; i < 200; ++i) {
            const auto& k = batch.draws[i];
            CHECK(k.k[0] + k.k[1] == k.sum);
        }
    }

    SECTION("empirical mean vector within 3 standard errors") {
        const auto expected = mean_vector(p, t);
        for (int comp = 0; comp < 2; ++comp) {
            double acc = 0.0, acc2 = 0.0;
            for (const auto& k : batch.draws) {
                const double v = static_cast<double>(k.k[comp]);
                acc += v;
                acc2 += v * v;
            }
            const double mean = acc / n;
            const double sd = std::sqrt((acc2 / n - mean * mean) / n);
            INFO("component " << comp);
            CHECK(std::abs(mean - expected[comp]) < 3.0 * sd);
        }
    }

    SECTION("conditional split frequencies within 4 binomial standard errors") {
        std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> by_sum;  // h -> (n, sum k1)
        for (const auto& k : batch.draws) {
            auto& entry = by_sum[k.sum];
            entry.first += 1;
            entry.second += k.k[0];
        }
        const double q = 0.6 / 1.5;
        int groups_checked = 0;
        for (const auto& [h, entry] : by_sum) {
            if (h == 0 || entry.first < 500) continue;
            const double trials = static_cast<double>(h * entry.first);
            const double freq = static_cast<double>(entry.second) / trials;
            const double se = std::sqrt(q * (1.0 - q) / trials);
            INFO("h = " << h << ", draws = " << entry.first);
            CHECK(std::abs(freq - q) < 4.0 * se);
            ++groups_checked;
        }
        CHECK(groups_checked >= 3);
    }
}

TEST_CASE("scaled covariance approaches C at large t") {
    const ModelParams p(0.7, {0.6, 0.9});
    const double t = 50.0;
    const int n = 20000;
    const VectorSampler sampler(p, t);
    SplitMix64 rng(split_key(42, 2));

    double s0 = 0.0, s1 = 0.0, s00 = 0.0, s01 = 0.0, s11 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k = sampler.draw(rng);
        const double v0 = static_cast<double>(k.k[0]);
        const double v1 = static_cast<double>(k.k[1]);
        s0 += v0;
        s1 += v1;
        s00 += v0 * v0;
        s01 += v0 * v1;
        s11 += v1 * v1;
    }
    const double m0 = s0 / n, m1 = s1 / n;
    const double c00 = (s00 / n - m0 * m0) / t;
    const double c01 = (s01 / n - m0 * m1) / t;
    const double c11 = (s11 / n - m1 * m1) / t;

    const auto c = covariance_matrix_C(p);
    CHECK(std::abs(c00 - c.entries(0, 0)) < 0.10 * c.entries(0, 0));
    CHECK(std::abs(c01 - c.entries(0, 1)) < 0.10 * c.entries(0, 1));
    CHECK(std::abs(c11 - c.entries(1, 1)) < 0.10 * c.entries(1, 1));
}
