#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rim/rng.hpp"

namespace rim {

// =============================================================================
// Grid geometry
// =============================================================================

/// Tolerance for grid alignment checks, in units of dt.
inline constexpr double kGridAlignTol = 1e-6;

/// Index of time t on a uniform dt-grid. Throws if t is not (nearly) a grid
/// multiple of dt.
inline std::int64_t grid_steps(double t, double dt, const char* what = "time") {
    const double q = t / dt;
    const double r = std::llround(q);
    if (std::fabs(q - r) > kGridAlignTol) {
        throw std::invalid_argument(std::string(what) + " is not aligned to the dt grid: t=" +
                                    std::to_string(t) + ", dt=" + std::to_string(dt));
    }
    return static_cast<std::int64_t>(std::llround(q));
}

// =============================================================================
// Two-sided Wiener path
// =============================================================================

/// A discretized two-sided Wiener path, pinned to 0 at time 0, with N
/// independent scalar components on a uniform grid.
///
/// Index k runs over [0, n_left + n_right]; grid time is (k - n_left) * dt,
/// so time 0 is always a grid node and carries the value 0 exactly.
struct WienerGrid {
    double dt = 0.0;
    std::int64_t n_left = 0;   // nodes strictly left of 0
    std::int64_t n_right = 0;  // nodes strictly right of 0
    int components = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> values; // [component][node]

    std::int64_t size() const { return n_left + n_right + 1; }
    std::int64_t zero_index() const { return n_left; }
    double t_min() const { return -static_cast<double>(n_left) * dt; }
    double t_max() const { return static_cast<double>(n_right) * dt; }
    double time_at(std::int64_t k) const { return static_cast<double>(k - n_left) * dt; }

    /// Grid index of time t; throws on misalignment or window exhaustion.
    std::int64_t index_of(double t) const {
        const std::int64_t k = n_left + grid_steps(t, dt);
        if (k < 0 || k >= size()) {
            throw std::out_of_range("WienerGrid: time " + std::to_string(t) +
                                    " outside window [" + std::to_string(t_min()) + ", " +
                                    std::to_string(t_max()) + "]");
        }
        return k;
    }

    double value(int comp, std::int64_t k) const { return values[static_cast<std::size_t>(comp)][static_cast<std::size_t>(k)]; }
    double at(int comp, double t) const { return value(comp, index_of(t)); }

    /// Piecewise-linear interpolation between nodes (path model D-N1).
    double interp(int comp, double t) const {
        const double pos = t / dt + static_cast<double>(n_left);
        if (pos < 0.0 || pos > static_cast<double>(size() - 1)) {
            throw std::out_of_range("WienerGrid: interpolation time outside window");
        }
        const auto k = static_cast<std::int64_t>(std::floor(pos));
        if (k == size() - 1) return value(comp, k);
        const double w = pos - static_cast<double>(k);
        return (1.0 - w) * value(comp, k) + w * value(comp, k + 1);
    }
};

namespace detail {
inline constexpr std::uint64_t kTagRight = 0x5157u; // substream tags
inline constexpr std::uint64_t kTagLeft = 0x1e57u;
} // namespace detail

/// Sample a two-sided Wiener path. Deterministic in (seed, parameters).
///
/// Each half is built by cumulative Gaussian increments of variance dt from
/// its own substream; the left half is indexed outward from 0, so extending
/// t_max never changes it (and vice versa). Window endpoints snap to the
/// nearest grid multiple of dt.
inline WienerGrid sample_wiener(std::uint64_t seed, int components, double t_min, double t_max,
                                double dt) {
    if (dt <= 0.0) throw std::invalid_argument("sample_wiener: dt must be > 0");
    if (t_min > 0.0 || t_max < 0.0) {
        throw std::invalid_argument("sample_wiener: window must satisfy t_min <= 0 <= t_max");
    }
    if (components < 1) throw std::invalid_argument("sample_wiener: components must be >= 1");

    WienerGrid g;
    g.dt = dt;
    g.n_left = static_cast<std::int64_t>(std::llround(-t_min / dt));
    g.n_right = static_cast<std::int64_t>(std::llround(t_max / dt));
    g.components = components;
    g.seed = seed;
    g.values.assign(static_cast<std::size_t>(components),
                    std::vector<double>(static_cast<std::size_t>(g.size()), 0.0));

    const double root_dt = std::sqrt(dt);
    for (int c = 0; c < components; ++c) {
        auto& v = g.values[static_cast<std::size_t>(c)];
        const std::int64_t z = g.zero_index();
        v[static_cast<std::size_t>(z)] = 0.0;

        GaussianStream right(derive_seed(seed, detail::kTagRight, static_cast<std::uint64_t>(c)));
        for (std::int64_t k = z; k < g.size() - 1; ++k) {
            v[static_cast<std::size_t>(k + 1)] = v[static_cast<std::size_t>(k)] + root_dt * right();
        }
        GaussianStream left(derive_seed(seed, detail::kTagLeft, static_cast<std::uint64_t>(c)));
        for (std::int64_t k = z; k > 0; --k) {
            v[static_cast<std::size_t>(k - 1)] = v[static_cast<std::size_t>(k)] + root_dt * left();
        }
    }
    return g;
}

/// Wiener shift: result(s) = path(s + t) - path(t) on the retained window.
/// t must be a grid multiple of dt and lie inside the window.
inline WienerGrid shift(const WienerGrid& path, double t) {
    const std::int64_t k = grid_steps(t, path.dt, "shift offset");
    if (k < -path.n_left || k > path.n_right) {
        throw std::out_of_range("shift: offset outside the path window");
    }
    WienerGrid g;
    g.dt = path.dt;
    g.n_left = path.n_left + k;
    g.n_right = path.n_right - k;
    g.components = path.components;
    g.seed = path.seed;
    g.values.assign(static_cast<std::size_t>(path.components), {});
    const std::int64_t pivot = path.zero_index() + k;
    for (int c = 0; c < path.components; ++c) {
        const auto& src = path.values[static_cast<std::size_t>(c)];
        auto& dst = g.values[static_cast<std::size_t>(c)];
        dst.resize(src.size());
        const double w_t = src[static_cast<std::size_t>(pivot)];
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] - w_t;
        dst[static_cast<std::size_t>(pivot)] = 0.0; // pin exactly
    }
    return g;
}

} // namespace rim
