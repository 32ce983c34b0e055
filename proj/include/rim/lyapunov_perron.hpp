#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rim/linear_cocycle.hpp"
#include "rim/nonlinear.hpp"
#include "rim/spectral.hpp"
#include "rim/vec.hpp"

namespace rim {

// =============================================================================
// Configuration and result types
// =============================================================================

/// Truncated weighted-space setup for the fixed-point solver.
struct LPConfig {
    double T_lp = 20.0;   // half-line truncation length
    double dt_lp = 0.01;  // trajectory grid step (multiple of the path dt)
    double tol = 1e-10;   // weighted-norm stopping tolerance
    int max_iter = 200;
    double gamma = 0.0;   // weight rate, (alpha + beta)/2
};

inline LPConfig lp_config_for(const DichotomyEstimate& dich, double T_lp, double dt_lp,
                              double tol = 1e-10, int max_iter = 200) {
    LPConfig cfg{T_lp, dt_lp, tol, max_iter, dich.gamma};
    return cfg;
}

/// Trajectory on the truncated half-line grid: [-T_lp, 0] (unstable side) or
/// [0, T_lp] (stable side), with the weighted sup-norm cached.
struct LPTrajectory {
    Side side = Side::unstable;
    double dt = 0.0;
    std::int64_t n = 0; // intervals; n+1 nodes
    std::vector<Vec> values;
    double weighted_norm = 0.0;

    /// Time of node j relative to the anchor: -T_lp + j dt or j dt.
    double time_at(std::int64_t j) const {
        return side == Side::unstable ? (static_cast<double>(j) - static_cast<double>(n)) * dt
                                      : static_cast<double>(j) * dt;
    }
};

/// Weighted sup-norm weight at relative time t: e^{-gamma t} on the unstable
/// side (t <= 0), e^{gamma t} on the stable side (t >= 0).
inline double lp_weight(Side side, double gamma, double t) {
    return side == Side::unstable ? std::exp(-gamma * t) : std::exp(gamma * t);
}

inline double lp_weighted_norm(const LPTrajectory& traj, double gamma) {
    double w = 0.0;
    for (std::int64_t j = 0; j <= traj.n; ++j) {
        w = std::max(w, lp_weight(traj.side, gamma, traj.time_at(j)) *
                            norm(traj.values[static_cast<std::size_t>(j)]));
    }
    return w;
}

inline double lp_weighted_dist(const LPTrajectory& a, const LPTrajectory& b, double gamma) {
    if (a.n != b.n || a.side != b.side) {
        throw std::invalid_argument("lp_weighted_dist: incompatible trajectories");
    }
    double w = 0.0;
    for (std::int64_t j = 0; j <= a.n; ++j) {
        w = std::max(w, lp_weight(a.side, gamma, a.time_at(j)) *
                            dist(a.values[static_cast<std::size_t>(j)],
                                 b.values[static_cast<std::size_t>(j)]));
    }
    return w;
}

/// Result of a graph solve: h in the complementary block at time 0 plus the
/// fixed-point trajectory and convergence diagnostics.
struct GraphResult {
    Vec h;
    LPTrajectory trajectory;
    int iterations = 0;
    double last_delta = 0.0;
    double contraction_est = 0.0;
    double tail_bound = 0.0;
};

struct SolveError : std::runtime_error {
    double contraction_est;
    int iterations;
    SolveError(const std::string& msg, double contraction, int iters)
        : std::runtime_error(msg), contraction_est(contraction), iterations(iters) {}
};

// =============================================================================
// Radius condition
// =============================================================================

struct RadiusCheck {
    bool ok = false;
    double budget = 0.0;   // 4 K B1 rho^eps / (alpha - beta), must be <= 1/2
    double rho_max = 0.0;  // ((alpha - beta) / (8 K B1))^{1/eps}
};

/// Contraction budget of the LP operator for cut-off radius rho. The exponent
/// on the admissible radius is 1/eps (the value forced by the contraction
/// bound: the two integral estimates sum to 4 K B1 rho^eps / (alpha - beta)).
inline RadiusCheck check_radius(const DichotomyEstimate& dich, double B1, double eps, double rho) {
    if (dich.alpha <= dich.beta) throw std::invalid_argument("check_radius: invalid dichotomy (alpha <= beta)");
    if (eps <= 0.0 || eps > 1.0) throw std::invalid_argument("check_radius: eps must lie in (0, 1]");
    if (B1 < 0.0 || rho <= 0.0) throw std::invalid_argument("check_radius: need B1 >= 0, rho > 0");
    RadiusCheck rc;
    rc.budget = 4.0 * dich.K * B1 * std::pow(rho, eps) / (dich.alpha - dich.beta);
    rc.rho_max = B1 > 0.0 ? std::pow((dich.alpha - dich.beta) / (8.0 * dich.K * B1), 1.0 / eps)
                          : std::numeric_limits<double>::infinity();
    rc.ok = rc.budget <= 0.5;
    return rc;
}

inline RadiusCheck check_radius(const DichotomyEstimate& dich, const CutoffField& field) {
    return check_radius(dich, field.certified_b1(), field.base.eps, field.rho);
}

// =============================================================================
// The Lyapunov-Perron operator
// =============================================================================

namespace detail {

/// Per-mode log-growth at the trajectory grid nodes, relative to node 0.
/// exponents[m][j] = log of the mode-m propagation factor from node 0 to j.
inline std::vector<std::vector<double>> lp_exponents(const LinearCocycleSpec& spec, Side side,
                                                     const LPConfig& cfg, double origin,
                                                     std::int64_t n) {
    std::vector<std::vector<double>> g(static_cast<std::size_t>(spec.dim()),
                                       std::vector<double>(static_cast<std::size_t>(n + 1), 0.0));
    const double t0 = side == Side::unstable ? origin - cfg.T_lp : origin;
    for (int m = 0; m < spec.dim(); ++m) {
        auto& gm = g[static_cast<std::size_t>(m)];
        for (std::int64_t j = 1; j <= n; ++j) {
            const double a = t0 + static_cast<double>(j - 1) * cfg.dt_lp;
            gm[static_cast<std::size_t>(j)] = gm[static_cast<std::size_t>(j - 1)] + spec.growth(m, a, a + cfg.dt_lp);
        }
    }
    return g;
}

} // namespace detail

/// One application of the unstable-side operator: given the anchor p in E^u
/// and a trajectory on [-T_lp, 0], evaluates
///   (J u)(t) = U^u(t) p + int_0^t U^u(t-tau) Pi^u F_rho(u(tau)) dtau
///            + int_{-T_lp}^t U^s(t-tau) Pi^s F_rho(u(tau)) dtau
/// by trapezoid quadrature, with the infinite tail truncated at -T_lp.
inline LPTrajectory lp_apply_unstable(const LinearCocycleSpec& spec, const CutoffField& field,
                                      const Splitting& split, const DichotomyEstimate& dich,
                                      const LPConfig& cfg, const Vec& p, const LPTrajectory& traj,
                                      double origin = 0.0) {
    (void)dich;
    const std::int64_t n = traj.n;
    const double dt = cfg.dt_lp;
    const auto g = detail::lp_exponents(spec, Side::unstable, cfg, origin, n);

    std::vector<Vec> F(static_cast<std::size_t>(n + 1));
    for (std::int64_t j = 0; j <= n; ++j) {
        F[static_cast<std::size_t>(j)] = apply_cutoff(field, traj.values[static_cast<std::size_t>(j)]);
    }

    LPTrajectory out;
    out.side = Side::unstable;
    out.dt = dt;
    out.n = n;
    out.values.assign(static_cast<std::size_t>(n + 1), Vec(static_cast<std::size_t>(spec.dim()), 0.0));

    for (int m = 0; m < spec.dim(); ++m) {
        const auto mm = static_cast<std::size_t>(m);
        const auto& gm = g[mm];
        if (m < split.cut) {
            // anchor flow + backward integral from 0
            double A = 0.0;
            out.values[static_cast<std::size_t>(n)][mm] = p[mm];
            for (std::int64_t j = n - 1; j >= 0; --j) {
                const double psi = std::exp(gm[static_cast<std::size_t>(j)] - gm[static_cast<std::size_t>(j + 1)]);
                A = psi * A - 0.5 * dt * (F[static_cast<std::size_t>(j)][mm] + psi * F[static_cast<std::size_t>(j + 1)][mm]);
                out.values[static_cast<std::size_t>(j)][mm] =
                    std::exp(gm[static_cast<std::size_t>(j)] - gm[static_cast<std::size_t>(n)]) * p[mm] + A;
            }
        } else {
            // forward integral from the truncation edge
            double S = 0.0;
            out.values[0][mm] = 0.0;
            for (std::int64_t j = 1; j <= n; ++j) {
                const double phi = std::exp(gm[static_cast<std::size_t>(j)] - gm[static_cast<std::size_t>(j - 1)]);
                S = phi * (S + 0.5 * dt * F[static_cast<std::size_t>(j - 1)][mm]) +
                    0.5 * dt * F[static_cast<std::size_t>(j)][mm];
                out.values[static_cast<std::size_t>(j)][mm] = S;
            }
        }
    }
    out.weighted_norm = lp_weighted_norm(out, cfg.gamma);
    return out;
}

/// Mirror operator on [0, T_lp] for the stable side:
///   (J u)(t) = U^s(t) q + int_0^t U^s(t-tau) Pi^s F_rho(u(tau)) dtau
///            + int_{T_lp}^t U^u(t-tau) Pi^u F_rho(u(tau)) dtau,
/// the last integral running through the backward-invertible unstable block.
inline LPTrajectory lp_apply_stable(const LinearCocycleSpec& spec, const CutoffField& field,
                                    const Splitting& split, const DichotomyEstimate& dich,
                                    const LPConfig& cfg, const Vec& q, const LPTrajectory& traj,
                                    double origin = 0.0) {
    (void)dich;
    const std::int64_t n = traj.n;
    const double dt = cfg.dt_lp;
    const auto g = detail::lp_exponents(spec, Side::stable, cfg, origin, n);

    std::vector<Vec> F(static_cast<std::size_t>(n + 1));
    for (std::int64_t j = 0; j <= n; ++j) {
        F[static_cast<std::size_t>(j)] = apply_cutoff(field, traj.values[static_cast<std::size_t>(j)]);
    }

    LPTrajectory out;
    out.side = Side::stable;
    out.dt = dt;
    out.n = n;
    out.values.assign(static_cast<std::size_t>(n + 1), Vec(static_cast<std::size_t>(spec.dim()), 0.0));

    for (int m = 0; m < spec.dim(); ++m) {
        const auto mm = static_cast<std::size_t>(m);
        const auto& gm = g[mm];
        if (m >= split.cut) {
            double S = 0.0;
            out.values[0][mm] = q[mm];
            for (std::int64_t j = 1; j <= n; ++j) {
                const double phi = std::exp(gm[static_cast<std::size_t>(j)] - gm[static_cast<std::size_t>(j - 1)]);
                S = phi * (S + 0.5 * dt * F[static_cast<std::size_t>(j - 1)][mm]) +
                    0.5 * dt * F[static_cast<std::size_t>(j)][mm];
                out.values[static_cast<std::size_t>(j)][mm] =
                    std::exp(gm[static_cast<std::size_t>(j)] - gm[0]) * q[mm] + S;
            }
        } else {
            double B = 0.0;
            out.values[static_cast<std::size_t>(n)][mm] = 0.0;
            for (std::int64_t j = n - 1; j >= 0; --j) {
                const double psi = std::exp(gm[static_cast<std::size_t>(j)] - gm[static_cast<std::size_t>(j + 1)]);
                B = psi * B - 0.5 * dt * (F[static_cast<std::size_t>(j)][mm] + psi * F[static_cast<std::size_t>(j + 1)][mm]);
                out.values[static_cast<std::size_t>(j)][mm] = B;
            }
        }
    }
    out.weighted_norm = lp_weighted_norm(out, cfg.gamma);
    return out;
}

// =============================================================================
// Graph solves
// =============================================================================

namespace detail {

inline void lp_validate(const LinearCocycleSpec& spec, const CutoffField& field,
                        const Splitting& split, const DichotomyEstimate& dich, const LPConfig& cfg,
                        const Vec& anchor, Side side, double origin) {
    validate(field);
    if (static_cast<int>(anchor.size()) != spec.dim() || split.dim != spec.dim()) {
        throw std::invalid_argument("lp solve: dimension mismatch");
    }
    if (cfg.tol <= 0.0 || cfg.max_iter < 1) throw std::invalid_argument("lp solve: bad tolerance/max_iter");
    if (cfg.T_lp < 20.0 / (dich.alpha - dich.beta)) {
        throw std::invalid_argument("lp solve: T_lp below the tail requirement 20/(alpha-beta)");
    }
    grid_steps(cfg.dt_lp, spec.setup.dt, "dt_lp");  // dt_lp multiple of the path step
    grid_steps(cfg.T_lp, cfg.dt_lp, "T_lp");
    const double lo = side == Side::unstable ? origin - cfg.T_lp : origin;
    const double hi = side == Side::unstable ? origin : origin + cfg.T_lp;
    if (lo < spec.valid_t_min() - 1e-12 || hi > spec.valid_t_max() + 1e-12) {
        throw std::out_of_range("lp solve: trajectory window outside the noise path window");
    }
    const RadiusCheck rc = check_radius(dich, field);
    if (!rc.ok) {
        throw std::invalid_argument("lp solve: radius condition fails (budget " +
                                    std::to_string(rc.budget) + " > 0.5)");
    }
    // anchor must sit in the correct block and inside the certified ball
    for (int m = 0; m < spec.dim(); ++m) {
        const bool in_block = side == Side::unstable ? m < split.cut : m >= split.cut;
        if (!in_block && anchor[static_cast<std::size_t>(m)] != 0.0) {
            throw std::invalid_argument("lp solve: anchor has components outside its block");
        }
    }
    if (norm(anchor) > field.rho / (4.0 * dich.K) + 1e-15) {
        throw std::invalid_argument("lp solve: anchor norm exceeds rho / (4 K)");
    }
}

inline GraphResult lp_solve(const LinearCocycleSpec& spec, const CutoffField& field,
                            const Splitting& split, const DichotomyEstimate& dich,
                            const LPConfig& cfg, const Vec& anchor, Side side, double origin) {
    lp_validate(spec, field, split, dich, cfg, anchor, side, origin);
    const std::int64_t n = grid_steps(cfg.T_lp, cfg.dt_lp);

    // initial iterate: the linear flow of the anchor (exact fixed point for F = 0)
    LPTrajectory traj;
    traj.side = side;
    traj.dt = cfg.dt_lp;
    traj.n = n;
    traj.values.assign(static_cast<std::size_t>(n + 1), Vec(static_cast<std::size_t>(spec.dim()), 0.0));
    const auto g = detail::lp_exponents(spec, side, cfg, origin, n);
    const std::int64_t j_anchor = side == Side::unstable ? n : 0;
    for (int m = 0; m < spec.dim(); ++m) {
        const auto mm = static_cast<std::size_t>(m);
        if (anchor[mm] == 0.0) continue;
        for (std::int64_t j = 0; j <= n; ++j) {
            traj.values[static_cast<std::size_t>(j)][mm] =
                std::exp(g[mm][static_cast<std::size_t>(j)] - g[mm][static_cast<std::size_t>(j_anchor)]) * anchor[mm];
        }
    }
    traj.weighted_norm = lp_weighted_norm(traj, cfg.gamma);

    GraphResult res;
    double prev_delta = -1.0;
    double contraction = 0.0;
    int it = 0;
    double delta = std::numeric_limits<double>::infinity();
    while (it < cfg.max_iter) {
        LPTrajectory next = side == Side::unstable
                                ? lp_apply_unstable(spec, field, split, dich, cfg, anchor, traj, origin)
                                : lp_apply_stable(spec, field, split, dich, cfg, anchor, traj, origin);
        delta = lp_weighted_dist(next, traj, cfg.gamma);
        ++it;
        if (prev_delta > cfg.tol) contraction = std::max(contraction, delta / prev_delta);
        prev_delta = delta;
        traj = std::move(next);
        if (delta <= cfg.tol) break;
    }
    if (delta > cfg.tol) {
        throw SolveError("lp solve: no convergence in " + std::to_string(cfg.max_iter) +
                             " iterations (contraction estimate " + std::to_string(contraction) + ")",
                         contraction, it);
    }

    res.iterations = it;
    res.last_delta = delta;
    res.contraction_est = contraction;
    const Vec& u0 = traj.values[static_cast<std::size_t>(j_anchor)];
    res.h = project(split, side == Side::unstable ? Side::stable : Side::unstable, u0);
    const double b0 = field.b0();
    res.tail_bound = side == Side::unstable
                         ? b0 * dich.K * std::exp(-(dich.gamma - dich.beta) * cfg.T_lp) / (dich.gamma - dich.beta)
                         : b0 * dich.K * std::exp(-(dich.alpha - dich.gamma) * cfg.T_lp) / (dich.alpha - dich.gamma);
    res.trajectory = std::move(traj);
    return res;
}

} // namespace detail

/// Pseudo-unstable graph value h^u(omega, p) = Pi^s u(0, p, omega) via the
/// contraction fixed point on [-T_lp, 0]. p must lie in the unstable block
/// with ||p|| <= rho / (4K).
inline GraphResult solve_graph_unstable(const LinearCocycleSpec& spec, const CutoffField& field,
                                        const Splitting& split, const DichotomyEstimate& dich,
                                        const LPConfig& cfg, const Vec& p, double origin = 0.0) {
    return detail::lp_solve(spec, field, split, dich, cfg, p, Side::unstable, origin);
}

/// Pseudo-stable graph value h^s(omega, q) = Pi^u u(0, q, omega) on [0, T_lp].
inline GraphResult solve_graph_stable(const LinearCocycleSpec& spec, const CutoffField& field,
                                      const Splitting& split, const DichotomyEstimate& dich,
                                      const LPConfig& cfg, const Vec& q, double origin = 0.0) {
    return detail::lp_solve(spec, field, split, dich, cfg, q, Side::stable, origin);
}

/// Operational invariance test of the unstable graph: evolve p + h^u(omega, p)
/// by the mild integrator for time tau and measure the distance of the image
/// to the graph at theta_tau omega.
inline double verify_invariance(const LinearCocycleSpec& spec, const CutoffField& field,
                                const Splitting& split, const DichotomyEstimate& dich,
                                const LPConfig& cfg, const Vec& p, double tau, double dt_mild) {
    if (tau <= 0.0 || tau > 5.0) throw std::invalid_argument("verify_invariance: tau must lie in (0, 5]");
    const GraphResult at0 = solve_graph_unstable(spec, field, split, dich, cfg, p, 0.0);
    const Vec x = p + at0.h;
    const Vec y = integrate_mild(spec, field, x, tau, dt_mild, 0.0);
    const Vec pu = project(split, Side::unstable, y);
    const GraphResult at_tau = solve_graph_unstable(spec, field, split, dich, cfg, pu, tau);
    return dist(project(split, Side::stable, y), at_tau.h);
}

} // namespace rim
