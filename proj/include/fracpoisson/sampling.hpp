#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fracpoisson/common.hpp"
#include "fracpoisson/process.hpp"

namespace fracpoisson {

// SplitMix64: 64-bit state, one additive round plus a finalizer per output.
// Chosen for exact cross-platform reproducibility and cheap stream splitting.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Stream-split rule: child key = the (index+1)-th SplitMix64 output of the
// parent key. Distinct indices give decorrelated generators; calls may be
// chained to split along several axes (e.g. t-grid point, then replication).
inline std::uint64_t split_key(std::uint64_t key, std::uint64_t index) {
    std::uint64_t z = key + (index + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Inverse-CDF sampler for the total count s(M(t)): tabulates the marginal CDF
// once (terms exponentiated from log-space) up to a certified truncation bound.
class MarginalSampler {
  public:
    MarginalSampler(const ModelParams& p, double t, double eps = 1e-15) {
        const std::int64_t bound = truncation_bound(p, t, eps);
        const double w = p.sum_lambda() * std::pow(t, p.nu);
        const double logw = std::log(w);
        const double log_e = log_mittag_leffler({p.nu, 1.0, 1.0, w});
        cdf_.reserve(static_cast<std::size_t>(bound) + 1);
        double acc = 0.0;
        for (std::int64_t h = 0; h <= bound; ++h) {
            const double hh = static_cast<double>(h);
            acc += std::exp(hh * logw - std::lgamma(p.nu * hh + 1.0) - log_e);
            cdf_.push_back(acc);
        }
    }

    std::int64_t draw(SplitMix64& rng) const {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end())
            throw std::runtime_error(
                "MarginalSampler: uniform draw fell beyond the certified CDF table");
        return it - cdf_.begin();
    }

    std::int64_t table_size() const { return static_cast<std::int64_t>(cdf_.size()); }

  private:
    std::vector<double> cdf_;
};

// Two-stage sampler for the full vector: draw the total, then split it with
// h categorical draws with probabilities lambda_i / s(lambda).
class VectorSampler {
  public:
    VectorSampler(const ModelParams& p, double t, double eps = 1e-15)
        : sum_sampler_(p, t, eps), cum_(p.m()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < p.m(); ++i) {
            acc += p.lambda[i] / p.sum_lambda();
            cum_[i] = acc;
        }
    }

    LatticePoint draw(SplitMix64& rng) const {
        const std::int64_t h = sum_sampler_.draw(rng);
        std::vector<std::int64_t> counts(cum_.size(), 0);
        for (std::int64_t event = 0; event < h; ++event) {
            const double u = rng.uniform();
            std::size_t i = 0;
            while (i + 1 < cum_.size() && u >= cum_[i]) ++i;
            ++counts[i];
        }
        return LatticePoint(std::move(counts));
    }

  private:
    MarginalSampler sum_sampler_;
    std::vector<double> cum_;
};

inline std::int64_t sample_sum(const ModelParams& p, double t, SplitMix64& rng) {
    return MarginalSampler(p, t).draw(rng);
}

inline LatticePoint sample_vector(const ModelParams& p, double t, SplitMix64& rng) {
    return VectorSampler(p, t).draw(rng);
}

struct SampleBatch {
    ModelParams params;
    double t;
    std::uint64_t seed;
    std::vector<LatticePoint> draws;
};

// n vector draws from one stream; the stream is replication 0 of `seed`.
inline SampleBatch make_sample_batch(const ModelParams& p, double t, std::uint64_t seed,
                                     std::size_t n) {
    SampleBatch batch{p, t, seed, {}};
    batch.draws.reserve(n);
    const VectorSampler sampler(p, t);
    SplitMix64 rng(split_key(seed, 0));
    for (std::size_t i = 0; i < n; ++i) batch.draws.push_back(sampler.draw(rng));
    return batch;
}

}  // namespace fracpoisson
