#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace fracpoisson {

// Rate functions are [0, +inf]-valued; +inf is a first-class value, never NaN.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_domain(bool ok, const char* msg) {
    if (!ok) throw std::domain_error(msg);
}

inline void require_config(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace detail

}  // namespace fracpoisson
