#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rim/diagnostics.hpp"
#include "rim/ornstein_uhlenbeck.hpp"
#include "rim/rng.hpp"

using namespace rim;

TEST_CASE("zero path maps to the zero OU process", "[ou]") {
    auto g = sample_wiener(1, 1, -10.0, 5.0, 0.05);
    for (auto& v : g.values[0]) v = 0.0;
    const auto ou = ou_stationary(g, 0, 1.0, 6.0);
    for (double z : ou.values) REQUIRE(z == 0.0);
}

TEST_CASE("ou parameter validation", "[ou]") {
    const auto g = sample_wiener(1, 1, -10.0, 1.0, 0.05);
    REQUIRE_THROWS_AS(ou_stationary(g, 0, 0.0, 6.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ou_stationary(g, 0, -1.0, 6.0), std::invalid_argument);
    REQUIRE_THROWS_AS(ou_stationary(g, 0, 1.0, 2.0), std::invalid_argument); // < 5/nu
    REQUIRE_THROWS_AS(ou_stationary(g, 0, 1.0, 12.0), std::out_of_range);    // > left window
    REQUIRE_THROWS_AS(ou_stationary(g, 1, 1.0, 6.0), std::invalid_argument); // bad component
}

TEST_CASE("integrated-SDE residual is O(dt)", "[ou]") {
    const double nu = 1.0;
    for (double dt : {0.02, 0.01}) {
        const auto g = sample_wiener(7, 1, -10.0, 50.0, dt);
        const auto ou = ou_stationary(g, 0, nu, 8.0);
        const double res = ou_sde_residual(ou, g);
        INFO("dt=" << dt << " residual=" << res);
        REQUIRE(res <= 0.5 * dt);
    }
}

TEST_CASE("long-horizon ergodic averages", "[ou][slow]") {
    // (1/t) int z* -> 0 within a 3-standard-error band per path, and
    // (1/t) int |z*| -> E|z*| = sqrt(1/(pi nu)) within 5% at t = 1e3, nu = 1
    // (averaged over a few paths; a single path sits at ~2.5% rms).
    const double nu = 1.0;
    const double t = 1000.0;
    const double dt = 0.01;
    const double se = 1.0 / (nu * std::sqrt(t));
    double mean_abs = 0.0;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) {
        const auto g = sample_wiener(derive_seed(2024, static_cast<std::uint64_t>(s)), 1, -10.0, t, dt);
        const auto ou = ou_stationary(g, 0, nu, 8.0);
        REQUIRE(std::fabs(ou.integral(0.0, t) / t) <= 3.0 * se);
        double abs_int = 0.0;
        const std::int64_t k0 = ou.index_of(0.0);
        const std::int64_t k1 = ou.index_of(t);
        for (std::int64_t k = k0; k < k1; ++k) {
            abs_int += 0.5 * dt * (std::fabs(ou.values[static_cast<std::size_t>(k)]) +
                                   std::fabs(ou.values[static_cast<std::size_t>(k + 1)]));
        }
        mean_abs += abs_int / t;
    }
    const double expect = ou_stationary_abs_mean(nu);
    REQUIRE(mean_abs / seeds == Catch::Approx(expect).epsilon(0.05));
}

TEST_CASE("stationary abs mean oracle: direct Monte Carlo over fresh seeds", "[ou][slow]") {
    // Independent oracle for E|z*| = sqrt(1/(pi nu)): sample z*(0) across seeds.
    const double nu = 0.5;
    double s = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const auto g = sample_wiener(derive_seed(99, static_cast<std::uint64_t>(i)), 1, -12.0, 0.0, 0.05);
        const auto ou = ou_stationary(g, 0, nu, 11.0);
        s += std::fabs(ou.at(0.0));
    }
    const double mc = s / n;
    REQUIRE(mc == Catch::Approx(ou_stationary_abs_mean(nu)).epsilon(0.05));
}

TEST_CASE("ou prefix integrals add exactly over adjacent windows", "[ou]") {
    const auto g = sample_wiener(5, 1, -8.0, 8.0, 0.02);
    const auto ou = ou_stationary(g, 0, 2.0, 4.0);
    const double a = ou.integral(-1.0, 0.5);
    const double b = ou.integral(0.5, 3.0);
    const double c = ou.integral(-1.0, 3.0);
    REQUIRE(a + b == c); // prefix differences: exact
}

TEST_CASE("temperedness slope diagnostics", "[diagnostics]") {
    std::vector<double> ts, xs;
    for (int i = 0; i < 20; ++i) {
        ts.push_back(static_cast<double>(i));
        xs.push_back(3.0);
    }
    REQUIRE(temperedness_slope(ts, xs) == Catch::Approx(0.0).margin(1e-14));

    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = std::exp(0.3 * ts[i]);
    REQUIRE(temperedness_slope(ts, xs) == Catch::Approx(0.3).epsilon(1e-6));

    xs[3] = -1.0;
    REQUIRE_THROWS_AS(temperedness_slope(ts, xs), std::domain_error);
    xs[3] = 1.0;
    REQUIRE_THROWS_AS(temperedness_slope({0, 1}, {1.0, 1.0}), std::invalid_argument);
}
