#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "rim/wiener.hpp"

namespace rim {

// =============================================================================
// Stationary Ornstein-Uhlenbeck path along a Wiener component
// =============================================================================

/// z*(theta_t omega) sampled on (a suffix of) the driving Wiener grid.
///
/// The stored window starts burn_in after the Wiener window's left edge; the
/// recursion is run from the far left so that the retained values are within
/// O(e^{-nu * burn_in}) of the exact stationary solution.
struct OUPath {
    double nu = 0.0;
    int component = 0;
    double burn_in = 0.0;
    double dt = 0.0;
    std::int64_t n_left = 0;  // valid nodes strictly left of 0
    std::int64_t n_right = 0;
    std::vector<double> values;  // z at node k, grid time (k - n_left) * dt
    std::vector<double> prefix;  // trapezoid integral of z from the window start to node k

    std::int64_t size() const { return n_left + n_right + 1; }
    double t_start() const { return -static_cast<double>(n_left) * dt; }
    double t_max() const { return static_cast<double>(n_right) * dt; }
    double time_at(std::int64_t k) const { return static_cast<double>(k - n_left) * dt; }

    std::int64_t index_of(double t) const {
        const std::int64_t k = n_left + grid_steps(t, dt);
        if (k < 0 || k >= size()) {
            throw std::out_of_range("OUPath: time outside valid window [" +
                                    std::to_string(t_start()) + ", " + std::to_string(t_max()) + "]");
        }
        return k;
    }

    double at(double t) const { return values[static_cast<std::size_t>(index_of(t))]; }

    /// Trapezoid integral of z over [t0, t1] (grid-aligned endpoints).
    /// Computed as a prefix difference, so integrals over adjacent windows
    /// add exactly.
    double integral(double t0, double t1) const {
        return prefix[static_cast<std::size_t>(index_of(t1))] -
               prefix[static_cast<std::size_t>(index_of(t0))];
    }
};

/// Stationary-law standard moments of z*: Var = 1/(2 nu), E|z*| = sqrt(1/(pi nu)).
inline double ou_stationary_variance(double nu) { return 1.0 / (2.0 * nu); }
inline double ou_stationary_abs_mean(double nu) { return std::sqrt(1.0 / (std::numbers::pi * nu)); }

/// Build the stationary OU path z*(theta_t omega) for one Wiener component.
///
/// One-step exact transition: z_{k+1} = e^{-nu dt} z_k + s * (w_{k+1} - w_k) / sqrt(dt)
/// with s^2 = (1 - e^{-2 nu dt}) / (2 nu), initialized at the window's left
/// edge from a variance-1/(2nu) functional of the path itself (so the zero
/// path maps to z == 0 and z stays a pure function of omega).
inline OUPath ou_stationary(const WienerGrid& path, int component, double nu, double burn_in) {
    if (nu <= 0.0) throw std::invalid_argument("ou_stationary: nu must be > 0");
    if (component < 0 || component >= path.components) {
        throw std::invalid_argument("ou_stationary: component out of range");
    }
    if (burn_in < 5.0 / nu) {
        throw std::invalid_argument("ou_stationary: burn_in must be >= 5/nu");
    }
    const std::int64_t k_burn = static_cast<std::int64_t>(std::llround(burn_in / path.dt));
    if (k_burn > path.n_left) {
        throw std::out_of_range("ou_stationary: burn_in exceeds the available left window");
    }
    if (path.size() < 2) throw std::invalid_argument("ou_stationary: degenerate path");

    const double dt = path.dt;
    const double phi = std::exp(-nu * dt);
    const double trans_sd = std::sqrt((1.0 - phi * phi) / (2.0 * nu));
    const double inc_scale = trans_sd / std::sqrt(dt);
    const auto& w = path.values[static_cast<std::size_t>(component)];

    // init: first increment rescaled to the stationary variance
    const double first_inc = w[1] - w[0];
    double z = first_inc / std::sqrt(dt) * std::sqrt(ou_stationary_variance(nu));

    OUPath ou;
    ou.nu = nu;
    ou.component = component;
    ou.burn_in = static_cast<double>(k_burn) * dt;
    ou.dt = dt;
    ou.n_left = path.n_left - k_burn;
    ou.n_right = path.n_right;
    ou.values.resize(static_cast<std::size_t>(ou.size()));
    ou.prefix.resize(static_cast<std::size_t>(ou.size()));

    for (std::int64_t k = 0; k < path.size(); ++k) {
        if (k >= k_burn) ou.values[static_cast<std::size_t>(k - k_burn)] = z;
        if (k + 1 < path.size()) {
            const double inc = w[static_cast<std::size_t>(k + 1)] - w[static_cast<std::size_t>(k)];
            z = phi * z + inc_scale * inc;
        }
    }
    ou.prefix[0] = 0.0;
    for (std::int64_t k = 1; k < ou.size(); ++k) {
        ou.prefix[static_cast<std::size_t>(k)] =
            ou.prefix[static_cast<std::size_t>(k - 1)] +
            0.5 * dt * (ou.values[static_cast<std::size_t>(k - 1)] + ou.values[static_cast<std::size_t>(k)]);
    }
    return ou;
}

/// Max over grid windows of the integrated-SDE residual
/// |z(t) - z(s) + nu * int_s^t z - (w(t) - w(s))|, via the cumulative residual.
inline double ou_sde_residual(const OUPath& ou, const WienerGrid& path) {
    const std::int64_t k0 = path.index_of(ou.t_start());
    double r = 0.0, rmin = 0.0, rmax = 0.0;
    const auto& w = path.values[static_cast<std::size_t>(ou.component)];
    const double w0 = w[static_cast<std::size_t>(k0)];
    const double z0 = ou.values[0];
    for (std::int64_t k = 0; k < ou.size(); ++k) {
        r = (ou.values[static_cast<std::size_t>(k)] - z0) + ou.nu * ou.prefix[static_cast<std::size_t>(k)] -
            (w[static_cast<std::size_t>(k0 + k)] - w0);
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    return rmax - rmin;
}

} // namespace rim
