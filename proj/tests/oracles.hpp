#pragma once

// Independent high-precision oracles used only by the test suite.
//
// The Mittag-Leffler oracle sums the defining series in 50-digit MPFR
// arithmetic until terms drop 55 orders of magnitude below the running sum.
// It shares no code with the library implementation.

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracles {

using mp_real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<50>>;

inline bool mp_term_negligible(const mp_real& term, const mp_real& sum) {
    static const mp_real cutoff("1e-55");
    return term < sum * cutoff;
}

// One Gamma evaluation per term. The parameters enter as their exact double
// values so the oracle evaluates the very same function as the library.
inline mp_real mittag_leffler(double alpha, double beta, double z) {
    if (z == 0.0) return 1 / tgamma(mp_real(beta));
    const mp_real a(alpha), b(beta), zz(z);
    mp_real sum = 0, zr = 1, prev = 0;
    for (long r = 0; r < 400000; ++r) {
        const mp_real term = zr / tgamma(a * r + b);
        sum += term;
        if (r > 4 && term < prev && mp_term_negligible(term, sum)) return sum;
        prev = term;
        zr *= zz;
    }
    throw std::runtime_error("oracle: series did not converge");
}

inline mp_real log_mittag_leffler(double alpha, double beta, double z) {
    return log(mittag_leffler(alpha, beta, z));
}

// Three-parameter series with rising-factorial weights, one Gamma per term;
// the weight (gamma)^(j)/j! is carried multiplicatively.
inline mp_real generalized_mittag_leffler(double alpha, double beta, double gamma, double z) {
    const mp_real a(alpha), b(beta), g(gamma), zz(z);
    mp_real sum = 0, zr = 1, w = 1, prev = 0;
    for (long j = 0; j < 400000; ++j) {
        const mp_real term = w * zr / tgamma(a * j + b);
        sum += term;
        if (j > 4 && term < prev && mp_term_negligible(term, sum)) return sum;
        prev = term;
        zr *= zz;
        w *= (g + j) / (j + 1);
    }
    throw std::runtime_error("oracle: generalized series did not converge");
}

}  // namespace oracles
