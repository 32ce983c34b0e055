#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rim/vec.hpp"

namespace rim {

// =============================================================================
// Truncated eigenbasis of -A
// =============================================================================

/// Truncated spectral model: eigenvalues mu_1 >= ... >= mu_J of -A, with the
/// coordinate unit vectors as eigenbasis. mu_j are growth rates (1/time).
struct SpectralModel {
    std::vector<double> mu;
    std::vector<std::string> labels;

    int dim() const { return static_cast<int>(mu.size()); }
};

inline void validate(const SpectralModel& m) {
    if (m.dim() < 2) throw std::invalid_argument("SpectralModel: need J >= 2");
    for (int j = 1; j < m.dim(); ++j) {
        if (m.mu[static_cast<std::size_t>(j)] > m.mu[static_cast<std::size_t>(j - 1)]) {
            throw std::invalid_argument("SpectralModel: mu must be non-increasing");
        }
    }
}

/// Dirichlet Laplacian on (0, pi) shifted by a constant: mu_j = a - j^2.
/// The shift makes sign-indefinite spectra easy to set up.
inline SpectralModel shifted_dirichlet_laplacian(int J, double a) {
    if (J < 2) throw std::invalid_argument("shifted_dirichlet_laplacian: need J >= 2");
    SpectralModel m;
    m.mu.resize(static_cast<std::size_t>(J));
    for (int j = 1; j <= J; ++j) {
        m.mu[static_cast<std::size_t>(j - 1)] = a - static_cast<double>(j) * static_cast<double>(j);
    }
    return m;
}

// =============================================================================
// Pseudo-hyperbolic splitting E^u + E^s
// =============================================================================

/// Coordinate splitting induced by a spectral-gap reference lambda:
/// E^u = span(e_1..e_cut), E^s = the complement. mu_u / mu_s are the
/// eigenvalues adjacent to the gap (+/-inf sentinels for empty blocks).
struct Splitting {
    int cut = 0;       // dim E^u
    int dim = 0;       // J
    double lambda = 0.0;
    double mu_u = std::numeric_limits<double>::infinity();   // smallest unstable eigenvalue
    double mu_s = -std::numeric_limits<double>::infinity();  // largest stable eigenvalue
};

enum class Side { unstable, stable };

inline Splitting make_splitting(const SpectralModel& model, double lambda) {
    validate(model);
    for (double mu : model.mu) {
        if (mu == lambda || std::fabs(mu - lambda) <= 1e-12 * std::max(1.0, std::fabs(mu))) {
            throw std::invalid_argument("make_splitting: lambda collides with an eigenvalue");
        }
    }
    Splitting s;
    s.dim = model.dim();
    s.lambda = lambda;
    int cut = 0;
    while (cut < model.dim() && model.mu[static_cast<std::size_t>(cut)] > lambda) ++cut;
    s.cut = cut;
    if (cut > 0) s.mu_u = model.mu[static_cast<std::size_t>(cut - 1)];
    if (cut < model.dim()) s.mu_s = model.mu[static_cast<std::size_t>(cut)];
    return s;
}

/// Coordinate projection onto the unstable (first cut modes) or stable block.
/// Idempotent; project(u, x) + project(s, x) = x exactly.
inline Vec project(const Splitting& split, Side side, const Vec& x) {
    if (static_cast<int>(x.size()) != split.dim) {
        throw std::invalid_argument("project: dimension mismatch");
    }
    Vec r(x.size(), 0.0);
    if (side == Side::unstable) {
        for (int j = 0; j < split.cut; ++j) r[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)];
    } else {
        for (int j = split.cut; j < split.dim; ++j) r[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)];
    }
    return r;
}

} // namespace rim
