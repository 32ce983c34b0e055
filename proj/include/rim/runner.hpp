#pragma once

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rim/config.hpp"
#include "rim/diagnostics.hpp"
#include "rim/io.hpp"
#include "rim/linear_cocycle.hpp"
#include "rim/lyapunov_perron.hpp"
#include "rim/nonlinear.hpp"
#include "rim/spde.hpp"
#include "rim/spectral.hpp"
#include "rim/version.hpp"

namespace rim {

inline const std::set<std::string>& known_commands() {
    static const std::set<std::string> cmds{"simulate-linear", "lyapunov", "dichotomy",
                                            "manifold",        "validate", "spde-compare"};
    return cmds;
}

// =============================================================================
// Config resolution
// =============================================================================

/// Materialize every defaulted knob for a command into an explicit value, so
/// the run.json echo reproduces the run exactly.
inline RunConfig resolve_config(const RunConfig& in, const std::string& command) {
    if (!known_commands().count(command)) throw ConfigError("unknown command '" + command + "'");
    RunConfig c = in;

    // spectral
    if (c.mu.empty()) {
        if (c.J < 2) throw ConfigError("spectral.J: need J >= 2");
        const auto model = shifted_dirichlet_laplacian(c.J, c.a);
        c.mu = model.mu;
    } else {
        c.J = static_cast<int>(c.mu.size());
        if (c.J < 2) throw ConfigError("spectral.mu: need at least 2 eigenvalues");
        for (std::size_t j = 1; j < c.mu.size(); ++j) {
            if (c.mu[j] > c.mu[j - 1]) throw ConfigError("spectral.mu: must be non-increasing");
        }
    }

    // noise
    if (c.N < 1) throw ConfigError("noise.N: need N >= 1");
    if (static_cast<int>(c.nus.size()) != c.N) {
        throw ConfigError("noise.nus: expected " + std::to_string(c.N) + " rates");
    }
    for (double nu : c.nus) {
        if (nu <= 0.0) throw ConfigError("noise.nus: rates must be > 0");
    }
    if (c.dt <= 0.0) throw ConfigError("noise.dt: must be > 0");
    if (c.d.empty()) c.d.assign(static_cast<std::size_t>(c.N), std::vector<double>(static_cast<std::size_t>(c.J), 0.0));
    if (static_cast<int>(c.d.size()) != c.N) {
        throw ConfigError("noise.d: expected " + std::to_string(c.N) + " diagonals");
    }
    for (const auto& row : c.d) {
        if (static_cast<int>(row.size()) != c.J) {
            throw ConfigError("noise.d: each diagonal needs " + std::to_string(c.J) + " entries");
        }
    }
    double min_nu = c.nus.front();
    for (double nu : c.nus) min_nu = std::min(min_nu, nu);
    if (c.burn_in < 0.0) c.burn_in = 8.0 / min_nu;
    if (c.burn_in < 5.0 / min_nu) throw ConfigError("noise.burn_in: must be >= 5/min(nu)");
    if (c.t_min > -c.burn_in) throw ConfigError("noise.t_min: window must cover the burn-in");
    if (c.t_max < 0.0) throw ConfigError("noise.t_max: must be >= 0");

    // field
    if (c.field_kind != "zero" && c.field_kind != "lipschitz_componentwise" &&
        c.field_kind != "lipschitz_coupled" && c.field_kind != "hoelder_radial") {
        throw ConfigError("field.kind: unknown kind '" + c.field_kind + "'");
    }
    if (c.eps <= 0.0 || c.eps > 1.0) throw ConfigError("field.eps: must lie in (0, 1]");
    if (c.rho <= 0.0) throw ConfigError("field.rho: must be > 0");
    if (c.b1_tilde < 0.0) {
        if (c.field_kind == "zero") {
            c.b1_tilde = 0.0;
        } else if (c.field_kind == "hoelder_radial") {
            NonlinearField f{FieldKind::hoelder_radial, c.c, c.eps, 0.0};
            c.b1_tilde = estimate_B1_tilde(f, c.J, c.rho, 2000, c.seed);
        } else {
            c.b1_tilde = std::fabs(c.c); // L_f; the cutoff budget uses (19/4) L_f
        }
    }

    // splitting-dependent defaults
    const bool needs_split = command == "dichotomy" || command == "manifold" || command == "validate";
    if (needs_split) {
        SpectralModel model{c.mu, {}};
        Splitting split;
        try {
            split = make_splitting(model, c.lambda);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("splitting.lambda: ") + e.what());
        }
        if (c.epsilon_hat < 0.0) {
            if (split.cut == 0 || split.cut == split.dim) {
                throw ConfigError("splitting.epsilon_hat: required when one block is empty");
            }
            c.epsilon_hat = (split.mu_u - split.mu_s) / 10.0;
        }
        if (c.T_lp < 0.0) {
            const bool interior = split.cut > 0 && split.cut < split.dim;
            const double gap = interior ? (split.mu_u - split.mu_s) - 2.0 * c.epsilon_hat
                                        : 2.0 * c.epsilon_hat;
            if (gap <= 0.0) throw ConfigError("splitting.epsilon_hat: degenerate gap");
            c.T_lp = std::ceil(20.0 / gap);
        }
    }
    if (c.validate_dt < 0.0) c.validate_dt = c.dt;
    if (c.x0.empty()) c.x0.assign(static_cast<std::size_t>(c.J), 1.0);
    if (static_cast<int>(c.x0.size()) != c.J) throw ConfigError("simulate.x0: needs J entries");

    // per-command window requirements
    auto need_right = [&](double t, const std::string& why) {
        if (c.t_max + 1e-9 < t) {
            throw ConfigError("noise.t_max: window must reach " + fmt17(t) + " for " + why);
        }
    };
    auto need_left = [&](double t, const std::string& why) {
        if (c.t_min - 1e-9 > t) {
            throw ConfigError("noise.t_min: window must reach " + fmt17(t) + " for " + why);
        }
    };
    if (command == "simulate-linear") {
        if (c.sim_t <= 0.0) throw ConfigError("simulate.t: must be > 0");
        need_right(c.sim_t, "the simulation horizon");
    } else if (command == "lyapunov") {
        if (c.lyap_horizon < 10.0) throw ConfigError("lyapunov.horizon: must be >= 10");
        need_right(c.lyap_horizon, "the estimation horizon");
    } else if (command == "dichotomy") {
        need_right(c.dich_horizon + c.temper_horizon, "the temperedness scan");
        if (c.temper_step <= 0.0) throw ConfigError("dichotomy.temper_step: must be > 0");
        if (std::floor(c.temper_horizon / c.temper_step) + 1.0 < 10.0) {
            throw ConfigError("dichotomy.temper_horizon: scan needs at least 10 anchors");
        }
    } else if (command == "manifold" || command == "validate") {
        need_right(c.dich_horizon, "the dichotomy estimation");
        if (c.side != "unstable" && c.side != "stable") {
            throw ConfigError("manifold.side: must be 'unstable' or 'stable'");
        }
        const bool unstable_side = command == "validate" || c.side == "unstable";
        if (unstable_side) need_left(-(c.T_lp + c.burn_in), "the trajectory grid plus burn-in");
        if (c.side == "stable" && command == "manifold") need_right(c.T_lp, "the trajectory grid");
        if (command == "validate") {
            if (c.tau <= 0.0 || c.tau > 5.0) throw ConfigError("validate.tau: must lie in (0, 5]");
            need_right(std::max(c.tau, c.dich_horizon), "the validation flow");
        }
        if (c.anchors.empty() && command == "manifold") {
            throw ConfigError("manifold.anchors: at least one anchor required");
        }
    } else if (command == "spde-compare") {
        if (c.spde_t <= 0.0) throw ConfigError("spde.t: must be > 0");
        if (c.spde_seeds < 1) throw ConfigError("spde.seeds: must be >= 1");
        if (c.dt_levels.size() < 2) throw ConfigError("spde.dt_levels: need at least 2 levels");
        for (double lv : c.dt_levels) {
            if (lv <= 0.0) throw ConfigError("spde.dt_levels: steps must be > 0");
            try {
                grid_steps(lv, c.dt);
            } catch (const std::invalid_argument&) {
                throw ConfigError("spde.dt_levels: " + fmt17(lv) + " is not a multiple of noise.dt");
            }
        }
        try {
            grid_steps(c.spde_t, c.dt);
        } catch (const std::invalid_argument&) {
            throw ConfigError("spde.t: must be a multiple of noise.dt");
        }
    }
    return c;
}

// =============================================================================
// Model construction from a resolved config
// =============================================================================

inline LinearCocycleSpec spec_from_config(const RunConfig& c) {
    SpectralModel model{c.mu, {}};
    NoiseSetup setup;
    setup.seed = c.seed;
    setup.components = c.N;
    setup.t_min = c.t_min;
    setup.t_max = c.t_max;
    setup.dt = c.dt;
    setup.nus = c.nus;
    setup.burn_in = c.burn_in;
    return make_linear_cocycle(model, c.d, setup);
}

inline NonlinearField field_from_config(const RunConfig& c) {
    NonlinearField f;
    if (c.field_kind == "zero") {
        f.kind = FieldKind::zero;
    } else if (c.field_kind == "lipschitz_componentwise") {
        f.kind = FieldKind::lipschitz_componentwise;
    } else if (c.field_kind == "lipschitz_coupled") {
        f.kind = FieldKind::lipschitz_coupled;
    } else {
        f.kind = FieldKind::hoelder_radial;
    }
    f.c = c.c;
    f.eps = c.eps;
    f.B1_tilde = c.b1_tilde >= 0.0 ? c.b1_tilde : 0.0;
    return f;
}

// =============================================================================
// Artifact writers
// =============================================================================

namespace detail {

inline void write_run_json(const std::filesystem::path& dir, const std::string& command,
                           const RunConfig& resolved) {
    nlohmann::json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["config"] = config_to_json(resolved);
    write_text_file(dir / "run.json", j.dump(2) + "\n");
}

inline void write_paths_csv(const std::filesystem::path& dir, const LinearCocycleSpec& spec) {
    CsvWriter csv(dir / "paths.csv");
    std::vector<std::string> header{"t"};
    for (int i = 1; i <= spec.setup.components; ++i) header.push_back("w_" + std::to_string(i));
    for (int i = 1; i <= spec.setup.components; ++i) header.push_back("z_" + std::to_string(i));
    csv.row(header);
    const auto& ou0 = spec.ou.front();
    for (std::int64_t k = 0; k < ou0.size(); ++k) {
        const double t = ou0.time_at(k);
        std::vector<std::string> row{fmt17(t)};
        for (int i = 0; i < spec.setup.components; ++i) row.push_back(fmt17(spec.wiener.at(i, t)));
        for (int i = 0; i < spec.setup.components; ++i) {
            row.push_back(fmt17(spec.ou[static_cast<std::size_t>(i)].values[static_cast<std::size_t>(k)]));
        }
        csv.row(row);
    }
}

inline void run_simulate_linear(const std::filesystem::path& dir, const RunConfig& c) {
    const auto spec = spec_from_config(c);
    write_paths_csv(dir, spec);
    CsvWriter csv(dir / "trajectory.csv");
    std::vector<std::string> header{"t"};
    for (int m = 1; m <= spec.dim(); ++m) header.push_back("u_" + std::to_string(m));
    csv.row(header);
    const std::int64_t n = grid_steps(c.sim_t, c.dt, "simulate.t");
    for (std::int64_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * c.dt;
        const Vec u = propagate_linear(spec, t, c.x0);
        std::vector<std::string> row{fmt17(t)};
        for (double v : u) row.push_back(fmt17(v));
        csv.row(row);
    }
}

inline void run_lyapunov(const std::filesystem::path& dir, const RunConfig& c,
                         nlohmann::json* summary = nullptr) {
    const auto spec = spec_from_config(c);
    const auto lam = estimate_lyapunov(spec, c.lyap_horizon);
    CsvWriter csv(dir / "lyapunov.csv");
    csv.row({"mode", "mu", "lambda_hat", "abs_err"});
    double max_err = 0.0;
    for (int m = 0; m < spec.dim(); ++m) {
        const double mu = spec.model.mu[static_cast<std::size_t>(m)];
        const double lh = lam[static_cast<std::size_t>(m)];
        const double err = std::fabs(lh - mu);
        max_err = std::max(max_err, err);
        csv.row({std::to_string(m + 1), fmt17(mu), fmt17(lh), fmt17(err)});
    }
    if (summary) (*summary)["max_abs_err"] = max_err;
}

inline void run_dichotomy(const std::filesystem::path& dir, const RunConfig& c,
                          nlohmann::json* summary = nullptr) {
    const auto spec = spec_from_config(c);
    const auto split = make_splitting(spec.model, c.lambda);
    const auto dich = estimate_dichotomy(spec, split, c.epsilon_hat, c.dich_horizon, c.dt_probe);
    std::vector<double> ts, Ks;
    for (double t = 0.0; t <= c.temper_horizon + 1e-9; t += c.temper_step) {
        ts.push_back(t);
        Ks.push_back(estimate_dichotomy(spec, split, c.epsilon_hat, c.dich_horizon, c.dt_probe, t).K);
    }
    const double slope = temperedness_slope(ts, Ks);
    nlohmann::json j{{"alpha", dich.alpha},
                     {"beta", dich.beta},
                     {"gamma", dich.gamma},
                     {"K", dich.K},
                     {"epsilon_hat", dich.epsilon_hat},
                     {"horizon", dich.horizon},
                     {"temperedness_slope", slope}};
    write_text_file(dir / "dichotomy.json", j.dump(2) + "\n");
    if (summary) {
        (*summary)["K"] = dich.K;
        (*summary)["temperedness_slope"] = slope;
    }
}

inline void run_manifold(const std::filesystem::path& dir, const RunConfig& c) {
    const auto spec = spec_from_config(c);
    const auto split = make_splitting(spec.model, c.lambda);
    const auto dich = estimate_dichotomy(spec, split, c.epsilon_hat, c.dich_horizon, c.dt_probe);
    const CutoffField field{field_from_config(c), c.rho};
    const auto rc = check_radius(dich, field);
    if (!rc.ok) {
        throw ConfigError("field.rho: radius condition fails (budget " + fmt17(rc.budget) +
                          " > 0.5, rho_max " + fmt17(rc.rho_max) + ")");
    }
    const LPConfig cfg = lp_config_for(dich, c.T_lp, c.dt_lp, c.tol, c.max_iter);
    const Side side = c.side == "unstable" ? Side::unstable : Side::stable;
    const int k_anchor = side == Side::unstable ? split.cut : split.dim - split.cut;
    const int k_graph = split.dim - k_anchor;

    CsvWriter csv(dir / "manifold.csv");
    std::vector<std::string> header;
    for (int i = 1; i <= k_anchor; ++i) header.push_back("p_" + std::to_string(i));
    for (int i = 1; i <= k_graph; ++i) header.push_back("h_" + std::to_string(i));
    header.insert(header.end(), {"iterations", "last_delta", "contraction_est", "tail_bound"});
    csv.row(header);

    double max_delta = 0.0, max_contraction = 0.0, tail = 0.0;
    int max_iters = 0;
    for (const auto& anchor_raw : c.anchors) {
        if (static_cast<int>(anchor_raw.size()) != k_anchor) {
            throw ConfigError("manifold.anchors: each anchor needs " + std::to_string(k_anchor) +
                              " entries");
        }
        Vec anchor(static_cast<std::size_t>(split.dim), 0.0);
        for (int i = 0; i < k_anchor; ++i) {
            const int m = side == Side::unstable ? i : split.cut + i;
            anchor[static_cast<std::size_t>(m)] = anchor_raw[static_cast<std::size_t>(i)];
        }
        const GraphResult res = side == Side::unstable
                                    ? solve_graph_unstable(spec, field, split, dich, cfg, anchor)
                                    : solve_graph_stable(spec, field, split, dich, cfg, anchor);
        std::vector<std::string> row;
        for (double v : anchor_raw) row.push_back(fmt17(v));
        for (int i = 0; i < k_graph; ++i) {
            const int m = side == Side::unstable ? split.cut + i : i;
            row.push_back(fmt17(res.h[static_cast<std::size_t>(m)]));
        }
        row.push_back(std::to_string(res.iterations));
        row.push_back(fmt17(res.last_delta));
        row.push_back(fmt17(res.contraction_est));
        row.push_back(fmt17(res.tail_bound));
        csv.row(row);
        max_delta = std::max(max_delta, res.last_delta);
        max_contraction = std::max(max_contraction, res.contraction_est);
        max_iters = std::max(max_iters, res.iterations);
        tail = res.tail_bound;
    }
    nlohmann::json j{{"side", c.side},
                     {"anchors", c.anchors.size()},
                     {"alpha", dich.alpha},
                     {"beta", dich.beta},
                     {"gamma", dich.gamma},
                     {"K", dich.K},
                     {"rho", c.rho},
                     {"contraction_budget", rc.budget},
                     {"rho_max", rc.rho_max},
                     {"max_iterations", max_iters},
                     {"max_last_delta", max_delta},
                     {"max_contraction_est", max_contraction},
                     {"tail_bound", tail}};
    write_text_file(dir / "manifold_summary.json", j.dump(2) + "\n");
}

inline void run_validate(const std::filesystem::path& dir, const RunConfig& c) {
    const auto spec = spec_from_config(c);
    const auto split = make_splitting(spec.model, c.lambda);
    const auto dich = estimate_dichotomy(spec, split, c.epsilon_hat, c.dich_horizon, c.dt_probe);
    const CutoffField field{field_from_config(c), c.rho};
    const auto rc = check_radius(dich, field);
    if (!rc.ok) {
        throw ConfigError("field.rho: radius condition fails (budget " + fmt17(rc.budget) + " > 0.5)");
    }
    const LPConfig cfg = lp_config_for(dich, c.T_lp, c.dt_lp, c.tol, c.max_iter);
    CsvWriter csv(dir / "validate.csv");
    std::vector<std::string> header;
    for (int i = 1; i <= split.cut; ++i) header.push_back("p_" + std::to_string(i));
    header.insert(header.end(), {"tau", "defect"});
    csv.row(header);
    for (const auto& anchor_raw : c.anchors) {
        if (static_cast<int>(anchor_raw.size()) != split.cut) {
            throw ConfigError("manifold.anchors: each anchor needs " + std::to_string(split.cut) +
                              " entries");
        }
        Vec anchor(static_cast<std::size_t>(split.dim), 0.0);
        for (int i = 0; i < split.cut; ++i) anchor[static_cast<std::size_t>(i)] = anchor_raw[static_cast<std::size_t>(i)];
        const double defect =
            verify_invariance(spec, field, split, dich, cfg, anchor, c.tau, c.validate_dt);
        std::vector<std::string> row;
        for (double v : anchor_raw) row.push_back(fmt17(v));
        row.push_back(fmt17(c.tau));
        row.push_back(fmt17(defect));
        csv.row(row);
    }
}

inline void run_spde_compare(const std::filesystem::path& dir, const RunConfig& c) {
    SpectralModel model{c.mu, {}};
    NoiseSetup base;
    base.seed = c.seed;
    base.components = c.N;
    base.dt = c.dt;
    base.nus = c.nus;
    base.burn_in = c.burn_in;
    const NonlinearField f = field_from_config(c);
    const auto rep =
        conjugation_order_study(model, c.d, base, f, c.x0, c.spde_t, c.dt_levels, c.spde_seeds);
    nlohmann::json j{{"dt_levels", rep.dt_levels},
                     {"mean_errors", rep.mean_errors},
                     {"fitted_order", rep.fitted_order},
                     {"seeds", rep.seeds},
                     {"pass", rep.pass}};
    write_text_file(dir / "spde_compare.json", j.dump(2) + "\n");

    // per-seed traces at the finest step; the emission stride snaps to a
    // multiple of it
    const double dt_fine = *std::min_element(c.dt_levels.begin(), c.dt_levels.end());
    const double stride = dt_fine * std::max(1.0, std::floor(c.spde_t / 50.0 / dt_fine));
    for (int s = 0; s < c.spde_seeds; ++s) {
        NoiseSetup setup = base;
        setup.seed = derive_seed(base.seed, 0x57DEu, static_cast<std::uint64_t>(s));
        setup.t_min = -(setup.burn_in + 1.0);
        setup.t_max = c.spde_t;
        SPDEModel m{make_linear_cocycle(model, c.d, setup), f};
        CsvWriter csv(dir / ("trace_seed" + std::to_string(s) + ".csv"));
        std::vector<std::string> header{"t"};
        for (int i = 1; i <= m.lin.dim(); ++i) header.push_back("conj_" + std::to_string(i));
        for (int i = 1; i <= m.lin.dim(); ++i) header.push_back("strat_" + std::to_string(i));
        csv.row(header);
        Vec uc = c.x0, us = c.x0;
        double t = 0.0;
        auto emit = [&]() {
            std::vector<std::string> row{fmt17(t)};
            for (double v : uc) row.push_back(fmt17(v));
            for (double v : us) row.push_back(fmt17(v));
            csv.row(row);
        };
        emit();
        const auto chunks = static_cast<std::int64_t>(std::floor(c.spde_t / stride + kGridAlignTol));
        for (std::int64_t k = 0; k < chunks; ++k) {
            const double next = std::min(static_cast<double>(k + 1) * stride, c.spde_t);
            uc = conjugate_flow(m, uc, next - t, dt_fine, t);
            us = integrate_stratonovich(m, us, next - t, dt_fine, t);
            t = next;
            emit();
        }
        if (t < c.spde_t - dt_fine * kGridAlignTol) {
            uc = conjugate_flow(m, uc, c.spde_t - t, dt_fine, t);
            us = integrate_stratonovich(m, us, c.spde_t - t, dt_fine, t);
            t = c.spde_t;
            emit();
        }
    }
}

} // namespace detail

// =============================================================================
// Entry point
// =============================================================================

/// Execute one command with a resolved config; writes artifacts into out_dir.
/// Throws ConfigError on validation failures, numerical errors propagate.
inline void run_command(const std::string& command, const RunConfig& raw,
                        const std::filesystem::path& out_dir) {
    const RunConfig c = resolve_config(raw, command);
    std::filesystem::create_directories(out_dir);
    detail::write_run_json(out_dir, command, c);
    if (command == "simulate-linear") {
        detail::run_simulate_linear(out_dir, c);
    } else if (command == "lyapunov") {
        detail::run_lyapunov(out_dir, c);
    } else if (command == "dichotomy") {
        detail::run_dichotomy(out_dir, c);
    } else if (command == "manifold") {
        detail::run_manifold(out_dir, c);
    } else if (command == "validate") {
        detail::run_validate(out_dir, c);
    } else if (command == "spde-compare") {
        detail::run_spde_compare(out_dir, c);
    }
}

/// Exit-code wrapper: 0 success, 2 config error, 3 numerical failure.
inline int run_command_exit_code(const std::string& command, const RunConfig& raw,
                                 const std::filesystem::path& out_dir, std::string* message = nullptr) {
    try {
        run_command(command, raw, out_dir);
        return 0;
    } catch (const ConfigError& e) {
        if (message) *message = e.what();
        return 2;
    } catch (const std::invalid_argument& e) {
        if (message) *message = e.what();
        return 2;
    } catch (const std::exception& e) {
        if (message) *message = e.what();
        return 3;
    }
}

} // namespace rim
