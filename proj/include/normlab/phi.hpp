#pragma once

#include <cmath>
#include <vector>

#include "normlab/errors.hpp"

namespace normlab {

// phi(x) = log2(x + 1). Strictly increasing and concave on [0, inf) with
// phi(0) = 0, phi(1) = 1.
inline double phi(double x) {
    if (x < 0) throw InvalidInput("phi requires a nonnegative argument");
    return std::log2(x + 1.0);
}

// Table of phi(0..n) for hot loops.
inline std::vector<double> phi_table(std::size_t n) {
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = std::log2(static_cast<double>(i) + 1.0);
    return t;
}

} // namespace normlab
