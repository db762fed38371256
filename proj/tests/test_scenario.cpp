#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "matpop/errors.hpp"
#include "matpop/runner.hpp"
#include "matpop/scenario.hpp"

using namespace matpop;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::filesystem::path temp_dir(const std::string& tag) {
    auto d = std::filesystem::temp_directory_path() / ("matpop_test_" + tag);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("the bundled linear_stable preset carries the canonical constants") {
    const Scenario s = load_scenario("linear_stable");
    CHECK(s.alpha == 0.2);
    CHECK(s.p == 1.0);
    CHECK(s.tau_family == "constant");
    CHECK(s.tau0 == 1.0);
    CHECK(s.g_slope == 0.5);
    CHECK(s.delta0 == 0.05);
    CHECK(s.gamma0 == 0.1);
    CHECK(s.beta0 == 0.04);
    CHECK(s.mode == "simulate");
    CHECK(s.horizon == 5.0);
}

TEST_CASE("shipped scenario files match the embedded presets") {
    for (const auto& [name, text] : bundled_scenarios()) {
        const auto path = std::filesystem::path(MATPOP_SCENARIO_DIR) / (name + ".scn");
        REQUIRE_MESSAGE(std::filesystem::exists(path), name);
        CHECK_MESSAGE(slurp(path) == text, name);
    }
}

TEST_CASE("parse errors carry context") {
    SUBCASE("empty file lists the required keys") {
        try {
            parse_scenario("", "empty");
            FAIL("expected ScenarioError");
        } catch (const ScenarioError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("model.alpha") != std::string::npos);
            CHECK(msg.find("run.mode") != std::string::npos);
            CHECK(msg.find("run.horizon") != std::string::npos);
        }
    }
    SUBCASE("negative horizon is rejected") {
        std::string text = "[model]\nalpha = 0.2\n[run]\nmode = simulate\nhorizon = -1\n";
        CHECK_THROWS_WITH_AS(parse_scenario(text), doctest::Contains("horizon"), ScenarioError);
    }
    SUBCASE("unknown keys are rejected with their line number") {
        std::string text = "[model]\nalpha = 0.2\nbogus = 1\n[run]\nmode = simulate\nhorizon = 1\n";
        CHECK_THROWS_WITH_AS(parse_scenario(text, "f"),
                             doctest::Contains("f: line 3: unknown key 'bogus'"), ScenarioError);
    }
    SUBCASE("unknown sections are rejected") {
        CHECK_THROWS_WITH_AS(parse_scenario("[nope]\nx = 1\n"), doctest::Contains("[nope]"),
                             ScenarioError);
    }
    SUBCASE("duplicate keys are rejected") {
        std::string text = "[model]\nalpha = 0.2\nalpha = 0.3\n";
        CHECK_THROWS_WITH_AS(parse_scenario(text), doctest::Contains("duplicate"), ScenarioError);
    }
    SUBCASE("malformed numbers are rejected") {
        std::string text = "[model]\nalpha = fast\n[run]\nmode = simulate\nhorizon = 1\n";
        CHECK_THROWS_WITH_AS(parse_scenario(text), doctest::Contains("not a number"),
                             ScenarioError);
    }
}

TEST_CASE("canonical serialization round-trips") {
    Scenario s = load_scenario("linear_stable");
    s.beta0 = 0.0375;
    s.horizon = 7.25;
    s.seed = 123456789012345ull;
    s.axes.push_back({"beta0", 0.01, 0.05, 5});
    s.mode = "sweep";
    const std::string text = serialize_scenario(s);
    const Scenario back = parse_scenario(text, "roundtrip");
    CHECK(back == s);
    CHECK(serialize_scenario(back) == text);
}

TEST_CASE("run_scenario writes artifacts and honors the exit-status contract") {
    const auto dir = temp_dir("runner");

    SUBCASE("trivial simulate succeeds") {
        Scenario s = load_scenario("trivial");
        s.horizon = 1.0;
        const RunResult r = run_simulation(s, (dir / "ok").string());
        CHECK(r.status == 0);
        CHECK(std::filesystem::exists(dir / "ok" / "field.csv"));
        CHECK(std::filesystem::exists(dir / "ok" / "diagnostics.json"));
        CHECK(r.error.empty());
    }
    SUBCASE("an invalid model fails with a machine-readable error record") {
        Scenario s = load_scenario("trivial");
        s.p = 0.5;  // breaks the divergence hypothesis
        const RunResult r = run_simulation(s, (dir / "bad").string());
        CHECK(r.status == 1);
        CHECK_FALSE(r.error.empty());
        CHECK(std::filesystem::exists(dir / "bad" / "error.json"));
    }
    SUBCASE("validate mode reports failed hypotheses through the exit status") {
        Scenario s = load_scenario("trivial");
        const RunResult ok = run_validate(s, (dir / "v1").string());
        CHECK(ok.status == 0);
        s.p = 0.5;
        const RunResult bad = run_validate(s, (dir / "v2").string());
        CHECK(bad.status == 1);
        CHECK(std::filesystem::exists(dir / "v2" / "validation.json"));
    }
    SUBCASE("empty sweep axis yields an empty table and status 0") {
        Scenario s = load_scenario("sweep_beta0");
        s.axes[0].steps = 0;
        const RunResult r = run_sweep(s, (dir / "sweep0").string());
        CHECK(r.status == 0);
        const std::string csv = slurp(dir / "sweep0" / "sweep.csv");
        CHECK(csv.find('\n') == csv.size() - 1);  // header only
    }
    SUBCASE("per-point sweep failures are recorded and the sweep continues") {
        Scenario s = load_scenario("sweep_beta0");
        s.maturity_nodes = 60;
        s.min_cell = 1e-3;
        s.sweep_horizon = 1.0;
        s.axes[0] = {"alpha", -0.1, 0.2, 2};  // first point is invalid
        const RunResult r = run_sweep(s, (dir / "sweep1").string());
        CHECK(r.status == 0);
        const std::string csv = slurp(dir / "sweep1" / "sweep.csv");
        CHECK(csv.find("hypotheses violated") != std::string::npos);
        CHECK(csv.find("ok") != std::string::npos);
    }
}

TEST_CASE("output directory resolution prefers the environment override") {
    Scenario s = load_scenario("trivial");
    CHECK(resolve_output_dir("", s) == s.out);
    CHECK(resolve_output_dir("cli_dir", s) == "cli_dir");
    setenv("MATPOP_OUT", "env_dir", 1);
    CHECK(resolve_output_dir("cli_dir", s) == "env_dir");
    unsetenv("MATPOP_OUT");
}

TEST_CASE("simulate twice with the same seed produces bit-identical CSVs") {
    const auto dir = temp_dir("determinism");
    Scenario s = load_scenario("linear_stable");
    s.maturity_nodes = 80;
    s.min_cell = 1e-3;
    s.horizon = 1.5;
    s.threads = 2;
    const RunResult a = run_simulation(s, (dir / "a").string());
    const RunResult b = run_simulation(s, (dir / "b").string());
    REQUIRE(a.status == 0);
    REQUIRE(b.status == 0);
    CHECK(slurp(dir / "a" / "field.csv") == slurp(dir / "b" / "field.csv"));
}
