#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <string>

namespace normlab {

// Exact scalar for the "exact" vector mode. Header-only arbitrary
// precision rationals; always kept in lowest terms by boost.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }
inline double to_double(double x) { return x; }

inline Rational abs_value(const Rational& q) { return q < 0 ? Rational(-q) : q; }
inline double abs_value(double x) { return std::fabs(x); }

inline std::string scalar_to_string(const Rational& q) { return q.str(); }
inline std::string scalar_to_string(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace normlab
