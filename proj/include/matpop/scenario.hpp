#ifndef MATPOP_SCENARIO_HPP
#define MATPOP_SCENARIO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace matpop {

/**
 * Flat, sectioned batch-run configuration. Sections: [model], [initial],
 * [grid], [run], optional [sweep]. Parsing is strict: unknown keys are
 * rejected with their line number so configs stay reproducible in version
 * control.
 */
struct Scenario {
    // [model] -- power velocity, tau family, linear division map, constant
    // rates, Hill reintroduction
    double alpha = 0.2;
    double p = 1.0;
    std::string tau_family = "constant";  // constant | affine
    double tau0 = 1.0;
    double tau1 = 0.0;
    double g_slope = 0.5;
    double delta0 = 0.05;
    double gamma0 = 0.1;
    double beta0 = 0.04;
    double beta_theta = 0.5;  // Hill half-saturation threshold
    double hill_n = 2.0;

    // [initial]
    std::string mu_family = "affine";  // zero | constant | affine | bump
    double mu0 = 0.1;
    double mu1 = -0.05;
    double mu_center = 0.5;
    double mu_width = 0.2;
    double mu_floor = 0.0;
    std::string gamma_mode = "compatible";  // zero | compatible | constant
    double age_rate = 0.5;                  // age profile e^{-age_rate a}
    double gamma_level = 0.0;               // for gamma_mode = constant

    // [grid]
    int maturity_nodes = 200;
    double min_cell = 1e-4;
    double dt = 0.0;
    double dt_factor = 20.0;

    // [run]
    std::string mode = "simulate";  // validate | simulate | audit | sweep | dump-maps
    double horizon = 5.0;
    double tol = 1e-10;
    double q_target = 0.5;
    std::uint64_t seed = 1;
    int threads = 1;
    double eps = 0.01;  // stability-certificate neighborhood
    std::string out = "out";
    bool dump_maps = false;

    // [sweep]
    struct Axis {
        std::string param;  // beta0 | delta0 | gamma0 | alpha
        double from = 0.0;
        double to = 0.0;
        int steps = 0;
    };
    std::vector<Axis> axes;
    double sweep_horizon = 2.5;

    bool operator==(const Scenario&) const = default;
};

inline bool operator==(const Scenario::Axis& a, const Scenario::Axis& b) {
    return a.param == b.param && a.from == b.from && a.to == b.to && a.steps == b.steps;
}

/// Parses scenario text; origin is used in error messages.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

/// Loads a scenario file, or a bundled preset when the path names one.
Scenario load_scenario(const std::string& path);

/// Canonical serialization: fixed section and key order, 17 significant
/// digits. parse(serialize(s)) == s.
std::string serialize_scenario(const Scenario& s);

/// Built-in presets by name (also shipped under scenarios/).
const std::map<std::string, std::string>& bundled_scenarios();

}  // namespace matpop

#endif
