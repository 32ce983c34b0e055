#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rim/linear_cocycle.hpp"
#include "rim/nonlinear.hpp"
#include "rim/vec.hpp"

namespace rim {

// =============================================================================
// SPDE with linear multiplicative Stratonovich noise
// =============================================================================

/// dX + AX dt = f(X) dt + sum_i D_i X o dw_i on the truncated eigenbasis,
/// all D_i diagonal (commuting structure). f must be globally Lipschitz
/// (zero or componentwise kind); the Hoelder kind is excluded here.
struct SPDEModel {
    LinearCocycleSpec lin;
    NonlinearField f;
};

inline void validate(const SPDEModel& m) {
    validate(m.f);
    if (m.f.kind == FieldKind::hoelder_radial) {
        throw std::invalid_argument("SPDEModel: f must be globally Lipschitz (zero or componentwise)");
    }
}

// =============================================================================
// Conjugation transform T(omega)
// =============================================================================

/// Diagonal random homeomorphism T(theta_t omega) = prod_i S_{D_i}(z_i*(theta_t omega)):
/// factor m is exp(sum_i z_i*(theta_t omega) d_{i,m}).
struct ConjugationMap {
    Vec scales;

    Vec apply(const Vec& x) const {
        Vec y(x.size());
        for (std::size_t m = 0; m < x.size(); ++m) y[m] = scales[m] * x[m];
        return y;
    }
    Vec apply_inverse(const Vec& x) const {
        Vec y(x.size());
        for (std::size_t m = 0; m < x.size(); ++m) y[m] = x[m] / scales[m];
        return y;
    }
    double norm_inverse() const {
        double n = 0.0;
        for (double s : scales) n = std::max(n, 1.0 / s);
        return n;
    }
};

inline ConjugationMap build_T(const LinearCocycleSpec& spec, double t) {
    ConjugationMap map;
    map.scales.assign(static_cast<std::size_t>(spec.dim()), 0.0);
    for (int m = 0; m < spec.dim(); ++m) {
        double e = 0.0;
        for (std::size_t i = 0; i < spec.ou.size(); ++i) {
            e += spec.ou[i].at(t) * spec.noise_ops[i][static_cast<std::size_t>(m)];
        }
        map.scales[static_cast<std::size_t>(m)] = std::exp(e);
    }
    return map;
}

inline ConjugationMap build_T(const SPDEModel& model, double t) { return build_T(model.lin, t); }

/// The conjugated nonlinearity F(theta_t omega, psi) = T^{-1}(theta_t omega) f(T(theta_t omega) psi).
inline TimeField transformed_field(const SPDEModel& model) {
    return [&model](double t, const Vec& psi) {
        const ConjugationMap T = build_T(model.lin, t);
        return T.apply_inverse(model.f(T.apply(psi)));
    };
}

/// Empirical Hypothesis-B constant of the conjugated nonlinearity at a fixed
/// orbit time t (frozen omega), for feeding check_radius on the transformed
/// equation.
inline double estimate_transformed_B1(const SPDEModel& model, double t, double rho, int samples,
                                      std::uint64_t seed) {
    const ConjugationMap T = build_T(model.lin, t);
    const auto F = [&](const Vec& u) { return T.apply_inverse(model.f(T.apply(u))); };
    return estimate_B1_sup(F, model.lin.dim(), model.f.eps, rho, samples, seed);
}

// =============================================================================
// Flows
// =============================================================================

/// Solve the conjugated random PDE and map back:
///   phi(t, omega, x) = T(theta_t omega) psi(t, omega, T^{-1}(omega) x),
/// where psi is the mild solution of the random evolution equation with
/// linear part diag(mu_m + sum_i nu_i z_i* d_{i,m}) and nonlinearity
/// T^{-1} f(T .).
inline Vec conjugate_flow(const SPDEModel& model, const Vec& x, double t, double dt,
                          double origin = 0.0) {
    validate(model);
    const Vec psi0 = build_T(model.lin, origin).apply_inverse(x);
    const Vec psi = integrate_mild(model.lin, transformed_field(model), psi0, t, dt, origin);
    return build_T(model.lin, origin + t).apply(psi);
}

/// Heun predictor-corrector for the Stratonovich system
///   dX_m = (mu_m X_m + f(X)_m) dt + sum_i d_{i,m} X_m o dw_i,
/// driven by the stored Wiener increments. Strong order 1 for this
/// diagonal-commutative noise.
inline Vec integrate_stratonovich(const SPDEModel& model, const Vec& x, double t, double dt,
                                  double origin = 0.0) {
    validate(model);
    const LinearCocycleSpec& spec = model.lin;
    if (static_cast<int>(x.size()) != spec.dim()) {
        throw std::invalid_argument("integrate_stratonovich: dimension mismatch");
    }
    if (t < 0.0) throw std::invalid_argument("integrate_stratonovich: t must be >= 0");
    if (dt <= 0.0) throw std::invalid_argument("integrate_stratonovich: dt must be > 0");
    grid_steps(t, spec.wiener.dt, "stratonovich horizon"); // aligned with the Wiener grid
    grid_steps(dt, spec.wiener.dt, "stratonovich step");

    const int J = spec.dim();
    const auto N = spec.ou.size();
    const auto drift = [&](const Vec& u) {
        Vec b = model.f(u);
        for (int m = 0; m < J; ++m) {
            b[static_cast<std::size_t>(m)] += spec.model.mu[static_cast<std::size_t>(m)] * u[static_cast<std::size_t>(m)];
        }
        return b;
    };

    Vec u = x;
    std::vector<double> dw(N);
    const auto full = static_cast<std::int64_t>(std::floor(t / dt + kGridAlignTol));
    const double t_end = origin + t;
    for (std::int64_t nstep = 0; nstep < full + 1; ++nstep) {
        const double tn = origin + static_cast<double>(nstep) * dt;
        const double tn1 = nstep < full ? origin + static_cast<double>(nstep + 1) * dt : t_end;
        const double h = tn1 - tn;
        if (h <= dt * kGridAlignTol) break; // no remainder
        for (std::size_t i = 0; i < N; ++i) {
            dw[i] = spec.wiener.at(static_cast<int>(i), tn1) - spec.wiener.at(static_cast<int>(i), tn);
        }
        const Vec b0 = drift(u);
        Vec pred(u.size());
        for (int m = 0; m < J; ++m) {
            const auto mm = static_cast<std::size_t>(m);
            double noise = 0.0;
            for (std::size_t i = 0; i < N; ++i) noise += dw[i] * spec.noise_ops[i][mm];
            pred[mm] = u[mm] + h * b0[mm] + noise * u[mm];
        }
        const Vec b1 = drift(pred);
        for (int m = 0; m < J; ++m) {
            const auto mm = static_cast<std::size_t>(m);
            double noise = 0.0;
            for (std::size_t i = 0; i < N; ++i) noise += dw[i] * spec.noise_ops[i][mm];
            u[mm] = u[mm] + 0.5 * h * (b0[mm] + b1[mm]) + 0.5 * noise * (u[mm] + pred[mm]);
        }
    }
    return u;
}

// =============================================================================
// Conjugation agreement study
// =============================================================================

/// Strong-error comparison of the conjugated flow against the direct
/// Stratonovich reference over fresh seeds and a ladder of step sizes.
struct ConjugationReport {
    std::vector<double> dt_levels;
    std::vector<double> mean_errors;
    double fitted_order = 0.0;
    int seeds = 0;
    bool pass = false; // empirical order >= 0.8
};

/// Recipe for fresh replicas: model/noise parameters minus the materialized
/// paths. Each seed builds its own window [-(burn_in+1), t].
inline ConjugationReport conjugation_order_study(const SpectralModel& model,
                                                 const std::vector<std::vector<double>>& noise_ops,
                                                 const NoiseSetup& base, const NonlinearField& f,
                                                 const Vec& x, double t,
                                                 const std::vector<double>& dt_levels, int seeds) {
    if (dt_levels.size() < 2) throw std::invalid_argument("conjugation_order_study: need >= 2 dt levels");
    if (seeds < 1) throw std::invalid_argument("conjugation_order_study: seeds >= 1");
    ConjugationReport rep;
    rep.dt_levels = dt_levels;
    rep.seeds = seeds;
    rep.mean_errors.assign(dt_levels.size(), 0.0);
    for (int s = 0; s < seeds; ++s) {
        NoiseSetup setup = base;
        setup.seed = derive_seed(base.seed, 0x57DEu, static_cast<std::uint64_t>(s));
        setup.t_min = -(setup.burn_in + 1.0);
        setup.t_max = t;
        SPDEModel m{make_linear_cocycle(model, noise_ops, setup), f};
        for (std::size_t l = 0; l < dt_levels.size(); ++l) {
            const Vec a = conjugate_flow(m, x, t, dt_levels[l]);
            const Vec b = integrate_stratonovich(m, x, t, dt_levels[l]);
            rep.mean_errors[l] += dist(a, b);
        }
    }
    for (auto& e : rep.mean_errors) e /= static_cast<double>(seeds);

    // least-squares slope of log(error) against log(dt)
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const auto n = static_cast<double>(dt_levels.size());
    for (std::size_t l = 0; l < dt_levels.size(); ++l) {
        const double lx = std::log(dt_levels[l]);
        const double ly = std::log(std::max(rep.mean_errors[l], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    rep.fitted_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.pass = rep.fitted_order >= 0.8;
    return rep;
}

} // namespace rim
