#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rim/nonlinear.hpp"
#include "rim/vec.hpp"

namespace rim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// =============================================================================
// Run configuration
// =============================================================================

/// All knobs for one CLI run, one block per concern. Fields defaulted to -1
/// (or empty) are materialized by resolve_config.
struct RunConfig {
    // run
    std::uint64_t seed = 1;

    // spectral: either explicit mu or (J, a) for the shifted Dirichlet Laplacian
    int J = 4;
    double a = 2.0;
    std::vector<double> mu; // wins over (J, a) when non-empty

    // noise
    int N = 1;
    std::vector<double> nus{1.0};
    double dt = 0.01;
    double t_min = -20.0;
    double t_max = 20.0;
    double burn_in = -1.0; // auto: max(8 / min nu, 5 / min nu)
    std::vector<std::vector<double>> d; // per-component diagonals, each of length J

    // splitting
    double lambda = 0.0;
    double epsilon_hat = -1.0; // auto: (mu_u - mu_s) / 10

    // field
    std::string field_kind = "zero";
    double c = 0.0;
    double eps = 1.0;
    double rho = 0.25;
    double b1_tilde = -1.0; // auto per kind

    // lp
    double T_lp = -1.0; // auto: ceil(20 / (alpha - beta))
    double dt_lp = 0.01;
    double tol = 1e-10;
    int max_iter = 200;

    // simulate
    double sim_t = 5.0;
    Vec x0;

    // lyapunov
    double lyap_horizon = 1000.0;

    // dichotomy
    double dich_horizon = 50.0;
    double dt_probe = 0.1;
    double temper_horizon = 200.0;
    double temper_step = 5.0;

    // manifold
    std::string side = "unstable";
    std::vector<Vec> anchors;

    // validate
    double tau = 1.0;
    double validate_dt = -1.0; // auto: noise dt

    // spde
    double spde_t = 1.0;
    std::vector<double> dt_levels{1e-2, 5e-3, 2.5e-3, 1.25e-3};
    int spde_seeds = 8;
};

// =============================================================================
// Parsing helpers
// =============================================================================

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_list(const std::string& s, const std::string& where) {
    std::vector<double> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError(where + ": cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse '" + s + "' as a number");
    }
}

inline std::int64_t parse_int(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse '" + s + "' as an integer");
    }
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": cannot parse '" + s + "' as an unsigned integer");
    }
}

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

inline SectionMap parse_ini(std::istream& in) {
    SectionMap sections;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            sections.try_emplace(section);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        sections[section][key] = val;
    }
    return sections;
}

} // namespace detail

// =============================================================================
// RunConfig <-> sections
// =============================================================================

inline RunConfig config_from_sections(const detail::SectionMap& sec) {
    RunConfig c;
    auto take = [&](const std::string& section, const std::string& key,
                    std::map<std::string, std::string>& rest) -> const std::string* {
        auto it = rest.find(key);
        if (it == rest.end()) return nullptr;
        static thread_local std::string held;
        held = it->second;
        rest.erase(it);
        (void)section;
        return &held;
    };

    for (const auto& [name, kv] : sec) {
        auto rest = kv;
        auto where = [&name](const std::string& key) { return name + "." + key; };
        if (name == "run") {
            if (auto* v = take(name, "seed", rest)) c.seed = detail::parse_u64(*v, where("seed"));
        } else if (name == "spectral") {
            if (auto* v = take(name, "J", rest)) c.J = static_cast<int>(detail::parse_int(*v, where("J")));
            if (auto* v = take(name, "a", rest)) c.a = detail::parse_double(*v, where("a"));
            if (auto* v = take(name, "mu", rest)) c.mu = detail::parse_list(*v, where("mu"));
        } else if (name == "noise") {
            if (auto* v = take(name, "N", rest)) c.N = static_cast<int>(detail::parse_int(*v, where("N")));
            if (auto* v = take(name, "nus", rest)) c.nus = detail::parse_list(*v, where("nus"));
            if (auto* v = take(name, "dt", rest)) c.dt = detail::parse_double(*v, where("dt"));
            if (auto* v = take(name, "t_min", rest)) c.t_min = detail::parse_double(*v, where("t_min"));
            if (auto* v = take(name, "t_max", rest)) c.t_max = detail::parse_double(*v, where("t_max"));
            if (auto* v = take(name, "burn_in", rest)) c.burn_in = detail::parse_double(*v, where("burn_in"));
            c.d.clear();
            for (int i = 1;; ++i) {
                const std::string key = "d" + std::to_string(i);
                auto it = rest.find(key);
                if (it == rest.end()) break;
                c.d.push_back(detail::parse_list(it->second, where(key)));
                rest.erase(it);
            }
        } else if (name == "splitting") {
            if (auto* v = take(name, "lambda", rest)) c.lambda = detail::parse_double(*v, where("lambda"));
            if (auto* v = take(name, "epsilon_hat", rest)) c.epsilon_hat = detail::parse_double(*v, where("epsilon_hat"));
        } else if (name == "field") {
            if (auto* v = take(name, "kind", rest)) c.field_kind = *v;
            if (auto* v = take(name, "c", rest)) c.c = detail::parse_double(*v, where("c"));
            if (auto* v = take(name, "eps", rest)) c.eps = detail::parse_double(*v, where("eps"));
            if (auto* v = take(name, "rho", rest)) c.rho = detail::parse_double(*v, where("rho"));
            if (auto* v = take(name, "b1_tilde", rest)) c.b1_tilde = detail::parse_double(*v, where("b1_tilde"));
        } else if (name == "lp") {
            if (auto* v = take(name, "T_lp", rest)) c.T_lp = detail::parse_double(*v, where("T_lp"));
            if (auto* v = take(name, "dt_lp", rest)) c.dt_lp = detail::parse_double(*v, where("dt_lp"));
            if (auto* v = take(name, "tol", rest)) c.tol = detail::parse_double(*v, where("tol"));
            if (auto* v = take(name, "max_iter", rest)) c.max_iter = static_cast<int>(detail::parse_int(*v, where("max_iter")));
        } else if (name == "simulate") {
            if (auto* v = take(name, "t", rest)) c.sim_t = detail::parse_double(*v, where("t"));
            if (auto* v = take(name, "x0", rest)) c.x0 = detail::parse_list(*v, where("x0"));
        } else if (name == "lyapunov") {
            if (auto* v = take(name, "horizon", rest)) c.lyap_horizon = detail::parse_double(*v, where("horizon"));
        } else if (name == "dichotomy") {
            if (auto* v = take(name, "horizon", rest)) c.dich_horizon = detail::parse_double(*v, where("horizon"));
            if (auto* v = take(name, "dt_probe", rest)) c.dt_probe = detail::parse_double(*v, where("dt_probe"));
            if (auto* v = take(name, "temper_horizon", rest)) c.temper_horizon = detail::parse_double(*v, where("temper_horizon"));
            if (auto* v = take(name, "temper_step", rest)) c.temper_step = detail::parse_double(*v, where("temper_step"));
        } else if (name == "manifold") {
            if (auto* v = take(name, "side", rest)) c.side = *v;
            if (auto* v = take(name, "anchors", rest)) {
                c.anchors.clear();
                std::stringstream ss(*v);
                std::string part;
                while (std::getline(ss, part, ';')) {
                    part = detail::trim(part);
                    if (part.empty()) continue;
                    c.anchors.push_back(detail::parse_list(part, where("anchors")));
                }
            }
        } else if (name == "validate") {
            if (auto* v = take(name, "tau", rest)) c.tau = detail::parse_double(*v, where("tau"));
            if (auto* v = take(name, "dt", rest)) c.validate_dt = detail::parse_double(*v, where("dt"));
        } else if (name == "spde") {
            if (auto* v = take(name, "t", rest)) c.spde_t = detail::parse_double(*v, where("t"));
            if (auto* v = take(name, "dt_levels", rest)) c.dt_levels = detail::parse_list(*v, where("dt_levels"));
            if (auto* v = take(name, "seeds", rest)) c.spde_seeds = static_cast<int>(detail::parse_int(*v, where("seeds")));
        } else {
            throw ConfigError("unknown section [" + name + "]");
        }
        if (!rest.empty()) {
            throw ConfigError(name + "." + rest.begin()->first + ": unknown key");
        }
    }
    return c;
}

// JSON form mirrors the sections; used for run.json echoes and reloads.
inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["run"] = {{"seed", c.seed}};
    j["spectral"] = {{"J", c.J}, {"a", c.a}, {"mu", c.mu}};
    j["noise"] = {{"N", c.N},       {"nus", c.nus},        {"dt", c.dt},
                  {"t_min", c.t_min}, {"t_max", c.t_max},  {"burn_in", c.burn_in},
                  {"d", c.d}};
    j["splitting"] = {{"lambda", c.lambda}, {"epsilon_hat", c.epsilon_hat}};
    j["field"] = {{"kind", c.field_kind}, {"c", c.c}, {"eps", c.eps}, {"rho", c.rho},
                  {"b1_tilde", c.b1_tilde}};
    j["lp"] = {{"T_lp", c.T_lp}, {"dt_lp", c.dt_lp}, {"tol", c.tol}, {"max_iter", c.max_iter}};
    j["simulate"] = {{"t", c.sim_t}, {"x0", c.x0}};
    j["lyapunov"] = {{"horizon", c.lyap_horizon}};
    j["dichotomy"] = {{"horizon", c.dich_horizon},
                      {"dt_probe", c.dt_probe},
                      {"temper_horizon", c.temper_horizon},
                      {"temper_step", c.temper_step}};
    j["manifold"] = {{"side", c.side}, {"anchors", c.anchors}};
    j["validate"] = {{"tau", c.tau}, {"dt", c.validate_dt}};
    j["spde"] = {{"t", c.spde_t}, {"dt_levels", c.dt_levels}, {"seeds", c.spde_seeds}};
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& root) {
    const nlohmann::json& j = root.contains("config") ? root.at("config") : root;
    RunConfig c;
    try {
        if (j.contains("run")) j.at("run").at("seed").get_to(c.seed);
        if (j.contains("spectral")) {
            const auto& s = j.at("spectral");
            if (s.contains("J")) s.at("J").get_to(c.J);
            if (s.contains("a")) s.at("a").get_to(c.a);
            if (s.contains("mu")) s.at("mu").get_to(c.mu);
        }
        if (j.contains("noise")) {
            const auto& s = j.at("noise");
            if (s.contains("N")) s.at("N").get_to(c.N);
            if (s.contains("nus")) s.at("nus").get_to(c.nus);
            if (s.contains("dt")) s.at("dt").get_to(c.dt);
            if (s.contains("t_min")) s.at("t_min").get_to(c.t_min);
            if (s.contains("t_max")) s.at("t_max").get_to(c.t_max);
            if (s.contains("burn_in")) s.at("burn_in").get_to(c.burn_in);
            if (s.contains("d")) s.at("d").get_to(c.d);
        }
        if (j.contains("splitting")) {
            const auto& s = j.at("splitting");
            if (s.contains("lambda")) s.at("lambda").get_to(c.lambda);
            if (s.contains("epsilon_hat")) s.at("epsilon_hat").get_to(c.epsilon_hat);
        }
        if (j.contains("field")) {
            const auto& s = j.at("field");
            if (s.contains("kind")) s.at("kind").get_to(c.field_kind);
            if (s.contains("c")) s.at("c").get_to(c.c);
            if (s.contains("eps")) s.at("eps").get_to(c.eps);
            if (s.contains("rho")) s.at("rho").get_to(c.rho);
            if (s.contains("b1_tilde")) s.at("b1_tilde").get_to(c.b1_tilde);
        }
        if (j.contains("lp")) {
            const auto& s = j.at("lp");
            if (s.contains("T_lp")) s.at("T_lp").get_to(c.T_lp);
            if (s.contains("dt_lp")) s.at("dt_lp").get_to(c.dt_lp);
            if (s.contains("tol")) s.at("tol").get_to(c.tol);
            if (s.contains("max_iter")) s.at("max_iter").get_to(c.max_iter);
        }
        if (j.contains("simulate")) {
            const auto& s = j.at("simulate");
            if (s.contains("t")) s.at("t").get_to(c.sim_t);
            if (s.contains("x0")) s.at("x0").get_to(c.x0);
        }
        if (j.contains("lyapunov") && j.at("lyapunov").contains("horizon")) {
            j.at("lyapunov").at("horizon").get_to(c.lyap_horizon);
        }
        if (j.contains("dichotomy")) {
            const auto& s = j.at("dichotomy");
            if (s.contains("horizon")) s.at("horizon").get_to(c.dich_horizon);
            if (s.contains("dt_probe")) s.at("dt_probe").get_to(c.dt_probe);
            if (s.contains("temper_horizon")) s.at("temper_horizon").get_to(c.temper_horizon);
            if (s.contains("temper_step")) s.at("temper_step").get_to(c.temper_step);
        }
        if (j.contains("manifold")) {
            const auto& s = j.at("manifold");
            if (s.contains("side")) s.at("side").get_to(c.side);
            if (s.contains("anchors")) s.at("anchors").get_to(c.anchors);
        }
        if (j.contains("validate")) {
            const auto& s = j.at("validate");
            if (s.contains("tau")) s.at("tau").get_to(c.tau);
            if (s.contains("dt")) s.at("dt").get_to(c.validate_dt);
        }
        if (j.contains("spde")) {
            const auto& s = j.at("spde");
            if (s.contains("t")) s.at("t").get_to(c.spde_t);
            if (s.contains("dt_levels")) s.at("dt_levels").get_to(c.dt_levels);
            if (s.contains("seeds")) s.at("seeds").get_to(c.spde_seeds);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("json config: ") + e.what());
    }
    return c;
}

/// Load a config from an INI-style file or a run.json echo (sniffed by the
/// first non-space character).
inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("json config: ") + e.what());
        }
        return config_from_json(j);
    }
    std::stringstream ss(text);
    return config_from_sections(detail::parse_ini(ss));
}

} // namespace rim
