#include "matpop/scenario.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "matpop/errors.hpp"

namespace matpop {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw std::invalid_argument("not a number: '" + v + "'");
    return d;
}

int parse_int(const std::string& v) {
    const double d = parse_double(v);
    const int i = (int)d;
    if ((double)i != d) throw std::invalid_argument("not an integer: '" + v + "'");
    return i;
}

std::uint64_t parse_u64(const std::string& v) {
    std::size_t used = 0;
    unsigned long long u = 0;
    try {
        u = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw std::invalid_argument("not a nonnegative integer: '" + v + "'");
    return (std::uint64_t)u;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* kRequired[] = {"model.alpha", "run.mode", "run.horizon"};

void validate_scenario(const Scenario& s) {
    auto fail = [](const std::string& msg) { throw ScenarioError("scenario: " + msg); };
    if (!(s.alpha > 0.0)) fail("model.alpha must be positive");
    if (s.tau_family != "constant" && s.tau_family != "affine")
        fail("model.tau must be 'constant' or 'affine'");
    if (!(s.g_slope > 0.0 && s.g_slope <= 1.0)) fail("model.g_slope must be in (0,1]");
    if (s.delta0 < 0.0 || s.gamma0 < 0.0) fail("mortality rates must be nonnegative");
    if (s.beta0 < 0.0) fail("model.beta0 must be nonnegative");
    if (!(s.beta_theta > 0.0)) fail("model.beta_theta must be positive");
    if (!(s.hill_n >= 1.0)) fail("model.hill_n must be >= 1");
    if (s.mu_family != "zero" && s.mu_family != "constant" && s.mu_family != "affine" &&
        s.mu_family != "bump")
        fail("initial.mu must be one of zero/constant/affine/bump");
    if (s.gamma_mode != "zero" && s.gamma_mode != "compatible" && s.gamma_mode != "constant")
        fail("initial.gamma_mode must be one of zero/compatible/constant");
    if (s.maturity_nodes < 16) fail("grid.maturity_nodes must be >= 16");
    if (!(s.min_cell > 0.0)) fail("grid.min_cell must be positive");
    if (s.dt < 0.0) fail("grid.dt must be >= 0");
    if (!(s.dt_factor > 0.0)) fail("grid.dt_factor must be positive");
    if (s.mode != "validate" && s.mode != "simulate" && s.mode != "audit" && s.mode != "sweep" &&
        s.mode != "dump-maps")
        fail("run.mode must be one of validate/simulate/audit/sweep/dump-maps");
    if (!(s.horizon > 0.0)) fail("run.horizon must be positive");
    if (!(s.tol > 0.0)) fail("run.tol must be positive");
    if (!(s.q_target > 0.0 && s.q_target < 1.0)) fail("run.q_target must be in (0,1)");
    if (s.threads < 1) fail("run.threads must be >= 1");
    if (!(s.eps > 0.0)) fail("run.eps must be positive");
    if (!(s.sweep_horizon > 0.0)) fail("sweep.sweep_horizon must be positive");
    for (const auto& ax : s.axes) {
        if (ax.param != "beta0" && ax.param != "delta0" && ax.param != "gamma0" &&
            ax.param != "alpha")
            fail("sweep.axis must be one of beta0/delta0/gamma0/alpha");
        if (ax.steps < 0) fail("sweep.steps must be >= 0");
    }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    Scenario s;
    Scenario::Axis axis1, axis2;
    bool axis1_named = false, axis2_named = false;

    using Setter = std::function<void(const std::string&)>;
    std::map<std::string, Setter> setters;
    auto dbl = [&](double& slot) {
        return [&slot](const std::string& v) { slot = parse_double(v); };
    };
    auto str = [&](std::string& slot) {
        return [&slot](const std::string& v) { slot = v; };
    };

    setters["model.alpha"] = dbl(s.alpha);
    setters["model.p"] = dbl(s.p);
    setters["model.tau"] = str(s.tau_family);
    setters["model.tau0"] = dbl(s.tau0);
    setters["model.tau1"] = dbl(s.tau1);
    setters["model.g_slope"] = dbl(s.g_slope);
    setters["model.delta"] = dbl(s.delta0);
    setters["model.gamma"] = dbl(s.gamma0);
    setters["model.beta0"] = dbl(s.beta0);
    setters["model.beta_theta"] = dbl(s.beta_theta);
    setters["model.hill_n"] = dbl(s.hill_n);

    setters["initial.mu"] = str(s.mu_family);
    setters["initial.mu0"] = dbl(s.mu0);
    setters["initial.mu1"] = dbl(s.mu1);
    setters["initial.mu_center"] = dbl(s.mu_center);
    setters["initial.mu_width"] = dbl(s.mu_width);
    setters["initial.mu_floor"] = dbl(s.mu_floor);
    setters["initial.gamma_mode"] = str(s.gamma_mode);
    setters["initial.age_rate"] = dbl(s.age_rate);
    setters["initial.gamma_level"] = dbl(s.gamma_level);

    setters["grid.maturity_nodes"] = [&](const std::string& v) {
        s.maturity_nodes = parse_int(v);
    };
    setters["grid.min_cell"] = dbl(s.min_cell);
    setters["grid.dt"] = dbl(s.dt);
    setters["grid.dt_factor"] = dbl(s.dt_factor);

    setters["run.mode"] = str(s.mode);
    setters["run.horizon"] = dbl(s.horizon);
    setters["run.tol"] = dbl(s.tol);
    setters["run.q_target"] = dbl(s.q_target);
    setters["run.seed"] = [&](const std::string& v) { s.seed = parse_u64(v); };
    setters["run.threads"] = [&](const std::string& v) { s.threads = parse_int(v); };
    setters["run.eps"] = dbl(s.eps);
    setters["run.out"] = str(s.out);
    setters["run.dump_maps"] = [&](const std::string& v) { s.dump_maps = parse_bool(v); };

    setters["sweep.axis"] = [&](const std::string& v) {
        axis1.param = v;
        axis1_named = true;
    };
    setters["sweep.from"] = dbl(axis1.from);
    setters["sweep.to"] = dbl(axis1.to);
    setters["sweep.steps"] = [&](const std::string& v) { axis1.steps = parse_int(v); };
    setters["sweep.axis2"] = [&](const std::string& v) {
        axis2.param = v;
        axis2_named = true;
    };
    setters["sweep.from2"] = dbl(axis2.from);
    setters["sweep.to2"] = dbl(axis2.to);
    setters["sweep.steps2"] = [&](const std::string& v) { axis2.steps = parse_int(v); };
    setters["sweep.sweep_horizon"] = dbl(s.sweep_horizon);

    static const std::set<std::string> kSections = {"model", "initial", "grid", "run", "sweep"};

    std::istringstream in(text);
    std::string raw, section;
    std::set<std::string> seen;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ScenarioError(origin + ": line " + std::to_string(line_no) +
                                    ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!kSections.count(section))
                throw ScenarioError(origin + ": line " + std::to_string(line_no) +
                                    ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ScenarioError(origin + ": line " + std::to_string(line_no) +
                                ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ScenarioError(origin + ": line " + std::to_string(line_no) +
                                ": key outside of any [section]");
        const std::string full = section + "." + key;
        const auto it = setters.find(full);
        if (it == setters.end())
            throw ScenarioError(origin + ": line " + std::to_string(line_no) +
                                ": unknown key '" + key + "' in [" + section + "]");
        if (!seen.insert(full).second)
            throw ScenarioError(origin + ": line " + std::to_string(line_no) +
                                ": duplicate key '" + full + "'");
        try {
            it->second(value);
        } catch (const std::exception& e) {
            throw ScenarioError(origin + ": line " + std::to_string(line_no) + ": '" + full +
                                "': " + e.what());
        }
    }

    std::string missing;
    for (const char* req : kRequired)
        if (!seen.count(req)) missing += missing.empty() ? req : std::string(", ") + req;
    if (!missing.empty())
        throw ScenarioError(origin + ": missing required keys: " + missing);

    if (axis1_named) s.axes.push_back(axis1);
    if (axis2_named) s.axes.push_back(axis2);
    validate_scenario(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        const auto& presets = bundled_scenarios();
        const auto it = presets.find(path);
        if (it != presets.end()) return parse_scenario(it->second, "preset:" + path);
        throw ScenarioError("cannot open scenario file '" + path + "' (and no preset by that name)");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream os;
    os << "[model]\n";
    os << "alpha = " << fmt(s.alpha) << "\n";
    os << "p = " << fmt(s.p) << "\n";
    os << "tau = " << s.tau_family << "\n";
    os << "tau0 = " << fmt(s.tau0) << "\n";
    os << "tau1 = " << fmt(s.tau1) << "\n";
    os << "g_slope = " << fmt(s.g_slope) << "\n";
    os << "delta = " << fmt(s.delta0) << "\n";
    os << "gamma = " << fmt(s.gamma0) << "\n";
    os << "beta0 = " << fmt(s.beta0) << "\n";
    os << "beta_theta = " << fmt(s.beta_theta) << "\n";
    os << "hill_n = " << fmt(s.hill_n) << "\n";
    os << "\n[initial]\n";
    os << "mu = " << s.mu_family << "\n";
    os << "mu0 = " << fmt(s.mu0) << "\n";
    os << "mu1 = " << fmt(s.mu1) << "\n";
    os << "mu_center = " << fmt(s.mu_center) << "\n";
    os << "mu_width = " << fmt(s.mu_width) << "\n";
    os << "mu_floor = " << fmt(s.mu_floor) << "\n";
    os << "gamma_mode = " << s.gamma_mode << "\n";
    os << "age_rate = " << fmt(s.age_rate) << "\n";
    os << "gamma_level = " << fmt(s.gamma_level) << "\n";
    os << "\n[grid]\n";
    os << "maturity_nodes = " << s.maturity_nodes << "\n";
    os << "min_cell = " << fmt(s.min_cell) << "\n";
    os << "dt = " << fmt(s.dt) << "\n";
    os << "dt_factor = " << fmt(s.dt_factor) << "\n";
    os << "\n[run]\n";
    os << "mode = " << s.mode << "\n";
    os << "horizon = " << fmt(s.horizon) << "\n";
    os << "tol = " << fmt(s.tol) << "\n";
    os << "q_target = " << fmt(s.q_target) << "\n";
    os << "seed = " << s.seed << "\n";
    os << "threads = " << s.threads << "\n";
    os << "eps = " << fmt(s.eps) << "\n";
    os << "out = " << s.out << "\n";
    os << "dump_maps = " << (s.dump_maps ? "true" : "false") << "\n";
    if (!s.axes.empty()) {
        os << "\n[sweep]\n";
        const auto& a = s.axes[0];
        os << "axis = " << a.param << "\n";
        os << "from = " << fmt(a.from) << "\n";
        os << "to = " << fmt(a.to) << "\n";
        os << "steps = " << a.steps << "\n";
        if (s.axes.size() > 1) {
            const auto& b = s.axes[1];
            os << "axis2 = " << b.param << "\n";
            os << "from2 = " << fmt(b.from) << "\n";
            os << "to2 = " << fmt(b.to) << "\n";
            os << "steps2 = " << b.steps << "\n";
        }
        os << "sweep_horizon = " << fmt(s.sweep_horizon) << "\n";
    }
    return os.str();
}

const std::map<std::string, std::string>& bundled_scenarios() {
    static const std::map<std::string, std::string> presets = {
        {"linear_stable", R"(# Canonical stable configuration: linear velocity, constant division
# age, halving division map, Hill reintroduction well inside the
# stability margin.
[model]
alpha = 0.2
p = 1
tau = constant
tau0 = 1.0
g_slope = 0.5
delta = 0.05
gamma = 0.1
beta0 = 0.04
beta_theta = 0.5
hill_n = 2

[initial]
mu = affine
mu0 = 0.1
mu1 = -0.05
gamma_mode = compatible
age_rate = 0.5

[grid]
maturity_nodes = 200
min_cell = 1e-4
dt_factor = 20

[run]
mode = simulate
horizon = 5.0
tol = 1e-10
seed = 1
eps = 0.01
out = out
)"},
        {"trivial", R"(# Zero data: the trivial equilibrium, everything stays identically zero.
[model]
alpha = 0.2
p = 1
tau = constant
tau0 = 1.0
g_slope = 0.5
delta = 0.05
gamma = 0.1
beta0 = 0.04
beta_theta = 0.5
hill_n = 2

[initial]
mu = zero
gamma_mode = zero

[grid]
maturity_nodes = 100
min_cell = 1e-3
dt_factor = 20

[run]
mode = simulate
horizon = 5.0
seed = 1
out = out
)"},
        {"invariance_ball", R"(# Small-data run inside the invariance ball: |mu| = eps, |Gamma| <= eps L.
[model]
alpha = 0.2
p = 1
tau = constant
tau0 = 1.0
g_slope = 0.5
delta = 0.05
gamma = 0.1
beta0 = 0.04
beta_theta = 0.5
hill_n = 2

[initial]
mu = constant
mu0 = 0.01
gamma_mode = compatible
age_rate = 1.0

[grid]
maturity_nodes = 200
min_cell = 1e-4
dt_factor = 20

[run]
mode = audit
horizon = 5.0
seed = 1
eps = 0.01
out = out
)"},
        {"sweep_beta0", R"(# Reintroduction-amplitude sweep across the stability boundary.
[model]
alpha = 0.2
p = 1
tau = constant
tau0 = 1.0
g_slope = 0.5
delta = 0.05
gamma = 0.1
beta0 = 0.04
beta_theta = 0.5
hill_n = 2

[initial]
mu = affine
mu0 = 0.1
mu1 = -0.05
gamma_mode = compatible
age_rate = 0.5

[grid]
maturity_nodes = 120
min_cell = 1e-3
dt_factor = 20

[run]
mode = sweep
horizon = 5.0
seed = 1
out = out

[sweep]
axis = beta0
from = 0.01
to = 0.06
steps = 6
sweep_horizon = 3.0
)"}};
    return presets;
}

}  // namespace matpop
