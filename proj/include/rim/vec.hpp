#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rim {

/// State vector: coefficients in the (orthonormal) eigenbasis, so the H-norm
/// is the Euclidean norm of the coefficients.
using Vec = std::vector<double>;

inline double norm(const Vec& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline Vec operator-(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vec: dimension mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec operator+(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vec: dimension mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec operator*(double s, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

inline double dist(const Vec& a, const Vec& b) { return norm(a - b); }

} // namespace rim
