#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rim {

/// log+ x = max(log x, 0).
inline double log_plus(double x) { return std::max(std::log(x), 0.0); }

/// Least-squares slope of log+ X against t; the temperedness diagnostic
/// (tends to 0 along orbits of a tempered random variable).
///
/// Requires at least 10 samples with strictly increasing t and X > 0.
inline double temperedness_slope(const std::vector<double>& ts, const std::vector<double>& xs) {
    if (ts.size() != xs.size()) throw std::invalid_argument("temperedness_slope: size mismatch");
    if (ts.size() < 10) throw std::invalid_argument("temperedness_slope: need at least 10 samples");
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (xs[i] <= 0.0) throw std::domain_error("temperedness_slope: samples must be positive");
        if (i > 0 && ts[i] <= ts[i - 1]) {
            throw std::invalid_argument("temperedness_slope: t must be increasing");
        }
    }
    const auto n = static_cast<double>(ts.size());
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double y = log_plus(xs[i]);
        st += ts[i];
        sy += y;
        stt += ts[i] * ts[i];
        sty += ts[i] * y;
    }
    const double denom = n * stt - st * st;
    if (denom == 0.0) throw std::invalid_argument("temperedness_slope: degenerate time grid");
    return (n * sty - st * sy) / denom;
}

} // namespace rim
