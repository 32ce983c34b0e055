#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rim/lyapunov_perron.hpp"
#include "rim/rng.hpp"

using namespace rim;

namespace {

struct LPFixture {
    LinearCocycleSpec spec;
    Splitting split;
    DichotomyEstimate dich;
    CutoffField field;
    LPConfig cfg;
};

LPFixture make_fixture(std::uint64_t seed, FieldKind kind, double c, double rho) {
    const auto model = shifted_dirichlet_laplacian(2, 2.0); // mu = (1, -2)
    NoiseSetup setup;
    setup.seed = seed;
    setup.components = 1;
    setup.t_min = -17.0;
    setup.t_max = 60.0;
    setup.dt = 0.01;
    setup.nus = {1.0};
    setup.burn_in = 6.0;
    auto spec = make_linear_cocycle(model, {{0.2, -0.15}}, setup);
    auto split = make_splitting(model, 0.0);
    auto dich = estimate_dichotomy(spec, split, 0.3, 50.0); // alpha 0.7, beta -1.7
    NonlinearField f{kind, c, 1.0, std::fabs(c)};
    if (kind == FieldKind::hoelder_radial) {
        f.B1_tilde = estimate_B1_tilde(f, 2, rho, 2000, seed);
    }
    CutoffField field{f, rho};
    LPConfig cfg = lp_config_for(dich, 10.0, 0.01);
    return {std::move(spec), split, dich, field, cfg};
}

/// Random trajectory with node values inside the 2 rho ball, where the
/// cut-off field is active.
LPTrajectory random_trajectory(const LPFixture& fx, Side side, double scale, std::uint64_t seed) {
    LPTrajectory traj;
    traj.side = side;
    traj.dt = fx.cfg.dt_lp;
    traj.n = grid_steps(fx.cfg.T_lp, fx.cfg.dt_lp);
    traj.values.assign(static_cast<std::size_t>(traj.n + 1), Vec(2, 0.0));
    GaussianStream gauss(seed);
    for (std::int64_t j = 0; j <= traj.n; ++j) {
        for (auto& v : traj.values[static_cast<std::size_t>(j)]) v = scale * gauss();
    }
    traj.weighted_norm = lp_weighted_norm(traj, fx.cfg.gamma);
    return traj;
}

} // namespace

TEST_CASE("radius condition arithmetic", "[lp][radius]") {
    DichotomyEstimate d;
    d.alpha = 1.5;
    d.beta = -1.5;
    d.gamma = 0.0;
    d.K = 1.0;
    const auto ok = check_radius(d, 1.0, 1.0, 0.3);
    REQUIRE(ok.ok);
    REQUIRE(ok.budget == Catch::Approx(0.4));
    const auto bad = check_radius(d, 1.0, 1.0, 0.5);
    REQUIRE_FALSE(bad.ok);
    REQUIRE(bad.budget == Catch::Approx(2.0 / 3.0));
    REQUIRE(check_radius(d, 1.0, 1.0, 1e-9).ok);
    REQUIRE(ok.rho_max == Catch::Approx(3.0 / 8.0));

    DichotomyEstimate flipped;
    flipped.alpha = -1.0;
    flipped.beta = 0.0;
    REQUIRE_THROWS_AS(check_radius(flipped, 1.0, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("zero field: the operator returns the linear anchor flow", "[lp]") {
    const auto fx = make_fixture(3, FieldKind::zero, 0.0, 0.25);
    const Vec p{0.03, 0.0};
    const auto t1 = random_trajectory(fx, Side::unstable, 0.05, 11);
    const auto t2 = random_trajectory(fx, Side::unstable, 0.05, 12);
    const auto a = lp_apply_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, p, t1);
    const auto b = lp_apply_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, p, t2);
    REQUIRE(lp_weighted_dist(a, b, fx.cfg.gamma) == 0.0); // independent of the trajectory
    for (std::int64_t j = 0; j <= a.n; ++j) {
        const double t = a.time_at(j);
        const Vec lin = propagate_linear(fx.spec, t, p);
        REQUIRE(dist(a.values[static_cast<std::size_t>(j)], lin) <= 1e-12);
    }
}

TEST_CASE("operator contraction ratio stays within the certified budget", "[lp][contraction]") {
    const auto fx = make_fixture(5, FieldKind::lipschitz_coupled, 0.02, 0.25);
    const auto rc = check_radius(fx.dich, fx.field);
    REQUIRE(rc.ok);
    const Vec p{0.02, 0.0};
    const Vec q{0.0, 0.02};
    // pairs: v = u + delta * e^{gamma tau} * direction, saturating the
    // weighted norm at every node (the proof's worst alignment)
    GaussianStream dir(999);
    auto aligned_pair = [&](const LPTrajectory& u, double delta) {
        LPTrajectory v = u;
        Vec w{dir(), dir()};
        const double nw = norm(w);
        for (auto& x : w) x /= nw;
        for (std::int64_t j = 0; j <= v.n; ++j) {
            const double s = delta / lp_weight(v.side, fx.cfg.gamma, v.time_at(j));
            for (int m = 0; m < 2; ++m) {
                v.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] +=
                    s * w[static_cast<std::size_t>(m)];
            }
        }
        v.weighted_norm = lp_weighted_norm(v, fx.cfg.gamma);
        return v;
    };
    double worst_u = 0.0, worst_s = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto u = random_trajectory(fx, Side::unstable, 0.1, 100 + static_cast<std::uint64_t>(rep));
        const auto v = rep % 2 ? aligned_pair(u, 0.05)
                               : random_trajectory(fx, Side::unstable, 0.1, 200 + static_cast<std::uint64_t>(rep));
        const auto ju = lp_apply_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, p, u);
        const auto jv = lp_apply_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, p, v);
        worst_u = std::max(worst_u, lp_weighted_dist(ju, jv, fx.cfg.gamma) /
                                        lp_weighted_dist(u, v, fx.cfg.gamma));

        const auto us = random_trajectory(fx, Side::stable, 0.1, 300 + static_cast<std::uint64_t>(rep));
        const auto vs = rep % 2 ? aligned_pair(us, 0.05)
                                : random_trajectory(fx, Side::stable, 0.1, 400 + static_cast<std::uint64_t>(rep));
        const auto jus = lp_apply_stable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, q, us);
        const auto jvs = lp_apply_stable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, q, vs);
        worst_s = std::max(worst_s, lp_weighted_dist(jus, jvs, fx.cfg.gamma) /
                                        lp_weighted_dist(us, vs, fx.cfg.gamma));
    }
    INFO("budget " << rc.budget << " worst unstable " << worst_u << " worst stable " << worst_s);
    REQUIRE(worst_u <= 0.55);
    REQUIRE(worst_s <= 0.55);
    REQUIRE(worst_u >= 0.001); // the pairs genuinely exercise the field
}

TEST_CASE("operator anchor Lipschitz bound", "[lp]") {
    const auto fx = make_fixture(7, FieldKind::lipschitz_coupled, 0.02, 0.25);
    const auto u = random_trajectory(fx, Side::unstable, 0.05, 9);
    GaussianStream gauss(17);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec p{0.02 * gauss(), 0.0};
        const Vec pb{0.02 * gauss(), 0.0};
        const auto jp = lp_apply_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, p, u);
        const auto jpb = lp_apply_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, pb, u);
        const double lhs = lp_weighted_dist(jp, jpb, fx.cfg.gamma);
        REQUIRE(lhs <= 1.1 * fx.dich.K * dist(p, pb));
    }
}

TEST_CASE("componentwise and radial fields keep the coordinate axes invariant", "[lp][structure]") {
    // These kinds never couple modes, so their graphs vanish identically in
    // the diagonal setting; the coupled kind produces a nontrivial graph.
    for (FieldKind kind : {FieldKind::lipschitz_componentwise, FieldKind::hoelder_radial}) {
        const auto fx = make_fixture(4, kind, 0.02, 0.25);
        const auto r = solve_graph_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, Vec{0.02, 0.0});
        REQUIRE(norm(r.h) == 0.0);
    }
    const auto fc = make_fixture(4, FieldKind::lipschitz_coupled, 0.02, 0.25);
    const auto rc = solve_graph_unstable(fc.spec, fc.field, fc.split, fc.dich, fc.cfg, Vec{0.02, 0.0});
    REQUIRE(norm(rc.h) > 1e-6);
}

TEST_CASE("graph solve: tangency at zero and zero-field degeneracy", "[lp][solve]") {
    auto fx = make_fixture(9, FieldKind::lipschitz_coupled, 0.02, 0.25);
    const auto r0 = solve_graph_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, Vec{0.0, 0.0});
    REQUIRE(norm(r0.h) <= 1e-12);
    REQUIRE(r0.iterations <= 2);
    for (const auto& v : r0.trajectory.values) REQUIRE(norm(v) <= 1e-12);

    const auto fz = make_fixture(9, FieldKind::zero, 0.0, 0.25);
    const auto rz = solve_graph_unstable(fz.spec, fz.field, fz.split, fz.dich, fz.cfg, Vec{0.02, 0.0});
    REQUIRE(norm(rz.h) <= 1e-12);
    const auto rzs = solve_graph_stable(fz.spec, fz.field, fz.split, fz.dich, fz.cfg, Vec{0.0, 0.02});
    REQUIRE(norm(rzs.h) <= 1e-12);
}

TEST_CASE("graph solve diagnostics and fixed-point residual", "[lp][solve]") {
    const auto fx = make_fixture(13, FieldKind::lipschitz_coupled, 0.02, 0.25);
    const Vec p{0.025, 0.0};
    const auto res = solve_graph_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, p);
    REQUIRE(res.last_delta <= fx.cfg.tol);
    REQUIRE(res.contraction_est <= 0.55);
    REQUIRE(res.iterations <= 40);
    REQUIRE(res.tail_bound <= 1e-6);
    REQUIRE(project(fx.split, Side::unstable, res.h) == Vec(2, 0.0));

    // geometric-convergence sanity bound on the iteration count
    const auto first = lp_apply_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, p,
                                         res.trajectory);
    REQUIRE(lp_weighted_dist(first, res.trajectory, fx.cfg.gamma) <= 2.0 * fx.cfg.tol);

    // one-step-from-start delta for the iteration bound
    LPTrajectory traj0 = res.trajectory; // rebuild the linear start
    const auto g =
        detail::lp_exponents(fx.spec, Side::unstable, fx.cfg, 0.0, res.trajectory.n);
    for (std::int64_t j = 0; j <= traj0.n; ++j) {
        traj0.values[static_cast<std::size_t>(j)] =
            Vec{std::exp(g[0][static_cast<std::size_t>(j)] - g[0][static_cast<std::size_t>(traj0.n)]) * p[0], 0.0};
    }
    const auto j1 = lp_apply_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, p, traj0);
    const double delta0 = lp_weighted_dist(j1, traj0, fx.cfg.gamma);
    const int bound = static_cast<int>(std::ceil(std::log(fx.cfg.tol / delta0) / std::log(0.55))) + 2;
    REQUIRE(res.iterations <= bound);
}

TEST_CASE("graph Lipschitz constants on both sides", "[lp][solve]") {
    const auto fx = make_fixture(15, FieldKind::lipschitz_coupled, 0.02, 0.25);
    GaussianStream gauss(23);
    for (int rep = 0; rep < 10; ++rep) {
        const Vec p{0.02 * gauss(), 0.0};
        const Vec pb{0.02 * gauss(), 0.0};
        if (dist(p, pb) < 1e-6) continue;
        const auto rp = solve_graph_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, p);
        const auto rpb = solve_graph_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, pb);
        REQUIRE(dist(rp.h, rpb.h) <= 2.2 * fx.dich.K * dist(p, pb));

        const Vec q{0.0, 0.02 * gauss()};
        const Vec qb{0.0, 0.02 * gauss()};
        if (dist(q, qb) < 1e-6) continue;
        const auto rq = solve_graph_stable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, q);
        const auto rqb = solve_graph_stable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, qb);
        REQUIRE(lp_weighted_dist(rq.trajectory, rqb.trajectory, fx.cfg.gamma) <=
                2.2 * fx.dich.K * dist(q, qb));
    }
}

TEST_CASE("solver precondition errors", "[lp][errors]") {
    auto fx = make_fixture(17, FieldKind::lipschitz_coupled, 0.02, 0.25);
    // anchor outside its block
    REQUIRE_THROWS_AS(
        solve_graph_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, Vec{0.01, 0.01}),
        std::invalid_argument);
    // anchor beyond rho / (4K)
    REQUIRE_THROWS_AS(
        solve_graph_unstable(fx.spec, fx.field, fx.split, fx.dich, fx.cfg, Vec{10.0, 0.0}),
        std::invalid_argument);
    // T_lp below the tail requirement
    LPConfig tiny = fx.cfg;
    tiny.T_lp = 2.0;
    REQUIRE_THROWS_AS(
        solve_graph_unstable(fx.spec, fx.field, fx.split, fx.dich, tiny, Vec{0.01, 0.0}),
        std::invalid_argument);
    // radius violation
    CutoffField fat = fx.field;
    fat.base.c = 10.0;
    fat.base.B1_tilde = 10.0;
    REQUIRE_THROWS_AS(
        solve_graph_unstable(fx.spec, fat, fx.split, fx.dich, fx.cfg, Vec{0.01, 0.0}),
        std::invalid_argument);
    // non-convergence reports the contraction estimate
    LPConfig one = fx.cfg;
    one.max_iter = 1;
    try {
        solve_graph_unstable(fx.spec, fx.field, fx.split, fx.dich, one, Vec{0.025, 0.0});
        FAIL("expected SolveError");
    } catch (const SolveError& e) {
        REQUIRE(e.iterations == 1);
    }
}

TEST_CASE("all-negative spectrum with a gap solves on the slow block", "[lp][inertial]") {
    // alpha < 0: the "unstable" block is merely slower-decaying; the solver
    // must still contract and produce a finite graph.
    const auto model = shifted_dirichlet_laplacian(2, 0.0); // mu = (-1, -4)
    NoiseSetup setup;
    setup.seed = 71;
    setup.components = 1;
    setup.t_min = -17.0;
    setup.t_max = 60.0;
    setup.dt = 0.01;
    setup.nus = {1.0};
    setup.burn_in = 6.0;
    const auto spec = make_linear_cocycle(model, {{0.2, -0.15}}, setup);
    const auto split = make_splitting(model, -2.5);
    REQUIRE(split.cut == 1);
    const auto dich = estimate_dichotomy(spec, split, 0.3, 50.0);
    REQUIRE(dich.alpha < 0.0);
    const CutoffField field{NonlinearField{FieldKind::lipschitz_coupled, 0.02, 1.0, 0.02}, 0.25};
    const LPConfig cfg = lp_config_for(dich, 10.0, 0.01);
    const auto res = solve_graph_unstable(spec, field, split, dich, cfg, Vec{0.02, 0.0});
    REQUIRE(std::isfinite(norm(res.h)));
    REQUIRE(norm(res.h) > 0.0);
    REQUIRE(res.contraction_est <= 0.55);
}

TEST_CASE("invariance defect: degenerate cases are exact", "[lp][invariance]") {
    auto fz = make_fixture(19, FieldKind::zero, 0.0, 0.25);
    const double d0 = verify_invariance(fz.spec, fz.field, fz.split, fz.dich, fz.cfg,
                                        Vec{0.02, 0.0}, 1.0, 0.01);
    REQUIRE(d0 <= 1e-8);

    auto fx = make_fixture(19, FieldKind::lipschitz_coupled, 0.02, 0.25);
    const double dz = verify_invariance(fx.spec, fx.field, fx.split, fx.dich, fx.cfg,
                                        Vec{0.0, 0.0}, 1.0, 0.01);
    REQUIRE(dz <= 1e-8);
}

TEST_CASE("invariance defect shrinks under refinement", "[lp][invariance][slow]") {
    auto fx = make_fixture(23, FieldKind::lipschitz_coupled, 0.02, 0.25);
    const Vec p{0.01, 0.0};
    LPConfig coarse = fx.cfg;
    coarse.dt_lp = 0.04;
    const double d1 = verify_invariance(fx.spec, fx.field, fx.split, fx.dich, coarse, p, 1.0, 0.04);
    LPConfig fine = fx.cfg;
    fine.dt_lp = 0.01;
    const double d2 = verify_invariance(fx.spec, fx.field, fx.split, fx.dich, fine, p, 1.0, 0.01);
    INFO("defect coarse " << d1 << " fine " << d2);
    REQUIRE(d2 < d1);
    REQUIRE(d2 <= 1e-3);
}
