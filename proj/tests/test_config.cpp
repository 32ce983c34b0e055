#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rim/config.hpp"
#include "rim/runner.hpp"

using namespace rim;

namespace {

const char* kSampleIni = R"(
# demo configuration
[run]
seed = 42

[spectral]
J = 4
a = 2.0

[noise]
N = 2
nus = 1.0, 1.0
dt = 0.01
t_min = -20
t_max = 30
burn_in = 8
d1 = 0.3, -0.2, 0.5, 0.1
d2 = -0.1, 0.4, 0.0, 0.2

[splitting]
lambda = 0.0
epsilon_hat = 0.3

[field]
kind = lipschitz_componentwise
c = 0.02
eps = 1.0
rho = 0.25

[lp]
T_lp = 10
dt_lp = 0.01

[dichotomy]
horizon = 20

[manifold]
side = unstable
anchors = 0.01 ; -0.02
)";

RunConfig parse_text(const std::string& text) {
    std::stringstream ss(text);
    return config_from_sections(detail::parse_ini(ss));
}

} // namespace

TEST_CASE("ini parsing covers sections, lists and anchors", "[config]") {
    const RunConfig c = parse_text(kSampleIni);
    REQUIRE(c.seed == 42);
    REQUIRE(c.J == 4);
    REQUIRE(c.a == 2.0);
    REQUIRE(c.N == 2);
    REQUIRE(c.nus == std::vector<double>{1.0, 1.0});
    REQUIRE(c.d.size() == 2);
    REQUIRE(c.d[0] == std::vector<double>{0.3, -0.2, 0.5, 0.1});
    REQUIRE(c.epsilon_hat == 0.3);
    REQUIRE(c.field_kind == "lipschitz_componentwise");
    REQUIRE(c.anchors.size() == 2);
    REQUIRE(c.anchors[0] == Vec{0.01});
    REQUIRE(c.anchors[1] == Vec{-0.02});
}

TEST_CASE("ini parsing rejects malformed input", "[config]") {
    REQUIRE_THROWS_AS(parse_text("[noise]\ndt 0.01\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_text("dt = 0.01\n"), ConfigError);          // key outside section
    REQUIRE_THROWS_AS(parse_text("[noise]\ndt = abc\n"), ConfigError);  // bad number
    REQUIRE_THROWS_AS(parse_text("[noise]\ndtt = 0.01\n"), ConfigError); // unknown key
    REQUIRE_THROWS_AS(parse_text("[nosuch]\nx = 1\n"), ConfigError);    // unknown section
}

TEST_CASE("json round trip preserves the config", "[config]") {
    const RunConfig a = parse_text(kSampleIni);
    const RunConfig b = config_from_json(config_to_json(a));
    REQUIRE(a.seed == b.seed);
    REQUIRE(a.mu == b.mu);
    REQUIRE(a.nus == b.nus);
    REQUIRE(a.d == b.d);
    REQUIRE(a.anchors == b.anchors);
    REQUIRE(a.field_kind == b.field_kind);
    REQUIRE(a.epsilon_hat == b.epsilon_hat);
    REQUIRE(a.T_lp == b.T_lp);
}

TEST_CASE("resolve_config materializes defaults", "[config]") {
    RunConfig c = parse_text(kSampleIni);
    c.epsilon_hat = -1.0;
    c.T_lp = -1.0;
    c.burn_in = -1.0;
    const RunConfig r = resolve_config(c, "manifold");
    REQUIRE(r.mu == std::vector<double>{1.0, -2.0, -7.0, -14.0});
    REQUIRE(r.burn_in == Catch::Approx(8.0));
    REQUIRE(r.epsilon_hat == Catch::Approx(0.3)); // (mu_u - mu_s)/10
    REQUIRE(r.T_lp == Catch::Approx(std::ceil(20.0 / (3.0 - 0.6))));
    REQUIRE(r.b1_tilde == Catch::Approx(0.02)); // L_f for the Lipschitz kind
    REQUIRE(static_cast<int>(r.x0.size()) == 4);
}

TEST_CASE("resolve_config reports field paths on errors", "[config]") {
    RunConfig c = parse_text(kSampleIni);
    c.nus = {1.0};
    try {
        resolve_config(c, "lyapunov");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("noise.nus") != std::string::npos);
    }

    c = parse_text(kSampleIni);
    c.t_max = 5.0;
    try {
        resolve_config(c, "lyapunov");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("noise.t_max") != std::string::npos);
    }

    c = parse_text(kSampleIni);
    c.field_kind = "cubic";
    REQUIRE_THROWS_AS(resolve_config(c, "manifold"), ConfigError);

    c = parse_text(kSampleIni);
    c.anchors.clear();
    REQUIRE_THROWS_AS(resolve_config(c, "manifold"), ConfigError);

    c = parse_text(kSampleIni);
    c.mu = {1.0, 2.0}; // increasing
    REQUIRE_THROWS_AS(resolve_config(c, "lyapunov"), ConfigError);
}

TEST_CASE("load_config sniffs ini and json", "[config]") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "rim_config_test";
    fs::create_directories(dir);
    write_text_file(dir / "c.ini", kSampleIni);
    const RunConfig a = load_config(dir / "c.ini");
    REQUIRE(a.seed == 42);

    nlohmann::json wrapper;
    wrapper["command"] = "lyapunov";
    wrapper["config"] = config_to_json(a);
    write_text_file(dir / "run.json", wrapper.dump(2));
    const RunConfig b = load_config(dir / "run.json");
    REQUIRE(b.seed == 42);
    REQUIRE(b.d == a.d);
    fs::remove_all(dir);
}
