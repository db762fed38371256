#include "matpop/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "matpop/errors.hpp"
#include "matpop/num/parallel.hpp"

namespace matpop {

namespace fs = std::filesystem;
using nlohmann::json;

ModelCoefficients coefficients_from_scenario(const Scenario& s) {
    ModelCoefficients c;
    c.velocity = Velocity::power(s.alpha, s.p);
    c.division_age = (s.tau_family == "affine") ? DivisionAge::affine(s.tau0, s.tau1)
                                                : DivisionAge::constant(s.tau0);
    c.division_map = DivisionMap::linear(s.g_slope);
    c.resting_loss = RateField::constant(s.delta0);
    c.apoptosis = RateField::constant(s.gamma0);
    c.reintroduction = Reintroduction::hill(RateField::constant(s.beta0),
                                            RateField::constant(s.beta_theta), s.hill_n);
    return c;
}

InitialData initial_data_from_scenario(const Scenario& s, const ModelCoefficients& coeffs) {
    std::function<double(double)> mu;
    if (s.mu_family == "zero") {
        mu = [](double) { return 0.0; };
    } else if (s.mu_family == "constant") {
        const double v = s.mu0;
        mu = [v](double) { return v; };
    } else if (s.mu_family == "affine") {
        const double a = s.mu0, b = s.mu1;
        mu = [a, b](double m) { return a + b * m; };
    } else {  // bump
        const double amp = s.mu0, c = s.mu_center, w = s.mu_width, floor = s.mu_floor;
        mu = [amp, c, w, floor](double m) {
            const double z = (m - c) / w;
            return floor + amp * std::exp(-z * z);
        };
    }

    if (s.gamma_mode == "zero") {
        InitialData d;
        d.mu_bar = mu;
        d.gamma = [](double, double) { return 0.0; };
        return d;
    }
    if (s.gamma_mode == "constant") {
        InitialData d;
        d.mu_bar = mu;
        const double level = s.gamma_level;
        d.gamma = [level](double, double) { return level; };
        return d;
    }
    const double rate = s.age_rate;
    return InitialData::compatible(coeffs, mu, [rate](double a) { return std::exp(-rate * a); });
}

Session build_session(const Scenario& s) {
    ModelCoefficients coeffs = coefficients_from_scenario(s);
    const ValidationReport report = validate_coefficients(coeffs);
    if (!report.ok())
        throw ValidationError("coefficient hypotheses violated:\n" + report.summary());
    CommitmentMapsBuilder builder(coeffs);
    Session session{coeffs, builder.build_factors(),
                    initial_data_from_scenario(s, coeffs),
                    GridSpec{s.maturity_nodes, s.min_cell, s.dt, s.dt_factor, {}},
                    SolverOptions{}};
    session.options.tol = s.tol;
    session.options.q_target = s.q_target;
    session.options.threads = s.threads;
    return session;
}

std::string resolve_output_dir(const std::string& cli_out, const Scenario& s) {
    if (const char* env = std::getenv("MATPOP_OUT"); env && *env) return env;
    if (!cli_out.empty()) return cli_out;
    return s.out;
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

json window_json(const WindowReport& w) {
    return json{{"t_begin", w.t_begin},     {"t_end", w.t_end},
                {"q", w.contraction_q},     {"radius", w.radius},
                {"iterations", w.iterations}, {"final_change", w.final_change},
                {"retries", w.retries}};
}

json certificate_json(const StabilityCertificate& c) {
    return json{{"delta_tilde", c.delta_tilde},
                {"gamma_tilde", c.gamma_tilde},
                {"kappa", c.kappa},
                {"lipschitz", c.lipschitz},
                {"lipschitz_exact", c.lipschitz_exact},
                {"zeta_norm", c.zeta_norm},
                {"tau_max", c.tau_max},
                {"eps", c.eps},
                {"rho", c.rho},
                {"rho_sup", c.rho_sup},
                {"c", c.c},
                {"feasible", c.feasible},
                {"margin", c.margin},
                {"local_ok", c.local_ok},
                {"local_both_ok", c.local_both_ok},
                {"global_ok", c.global_ok}};
}

json validation_json(const ValidationReport& r) {
    json arr = json::array();
    for (const auto& c : r.checks) {
        arr.push_back({{"name", c.name},
                       {"status", c.status == CheckStatus::Pass     ? "pass"
                                  : c.status == CheckStatus::Fail   ? "fail"
                                                                    : "assumed"},
                       {"worst_m", c.worst_m},
                       {"worst_value", c.worst_value},
                       {"note", c.note}});
    }
    return arr;
}

RunResult fail_result(const Scenario& s, const std::string& out_dir, const std::string& what) {
    RunResult r;
    r.status = 1;
    r.error = what;
    const json doc{{"error", what}, {"mode", s.mode}, {"scenario", serialize_scenario(s)}};
    const std::string path = (fs::path(out_dir) / "error.json").string();
    atomic_write(path, doc.dump(2) + "\n");
    r.artifacts.push_back(path);
    r.diagnostics_json = doc.dump(2);
    return r;
}

}  // namespace

void write_fields_csv(const std::string& path, const SolutionField& N, const SolutionField& P) {
    std::string out;
    out.reserve((std::size_t)P.nt * P.nm() * 64);
    out += "t,m,N,P\n";
    const int hist = N.zero_row();
    for (int n = 0; n < P.nt; ++n) {
        const double t = P.time(n);
        for (int j = 0; j < P.nm(); ++j) {
            out += fmt17(t);
            out += ',';
            out += fmt17(P.m[j]);
            out += ',';
            out += fmt17(N.at(hist + n, j));
            out += ',';
            out += fmt17(P.at(n, j));
            out += '\n';
        }
    }
    atomic_write(path, out);
}

void write_maps_csv(const std::string& path, const CommitmentMaps& maps) {
    std::string out = "m,theta,delta,g_inverse,g_inverse_prime,pi,zeta\n";
    const auto& g = maps.grid();
    for (std::size_t i = 0; i < g.size(); ++i) {
        out += fmt17(g[i]);
        out += ',';
        out += fmt17(maps.theta_table()[i]);
        out += ',';
        out += fmt17(maps.delta_table()[i]);
        out += ',';
        out += fmt17(maps.ginv_table()[i]);
        out += ',';
        out += fmt17(maps.ginv_prime_table()[i]);
        out += ',';
        out += fmt17(maps.pi_table()[i]);
        out += ',';
        out += fmt17(maps.zeta_table()[i]);
        out += '\n';
    }
    atomic_write(path, out);
}

RunResult run_validate(const Scenario& s, const std::string& out_dir) {
    try {
        const ModelCoefficients coeffs = coefficients_from_scenario(s);
        const ValidationReport report = validate_coefficients(coeffs);
        const InitialData data = initial_data_from_scenario(s, coeffs);
        const CompatReport compat = check_compatibility(data, coeffs, 1e-9);
        RunResult r;
        r.status = report.ok() ? 0 : 1;
        json doc{{"mode", "validate"},
                 {"checks", validation_json(report)},
                 {"ok", report.ok()},
                 {"compatibility",
                  {{"pass", compat.pass},
                   {"max_rel_deviation", compat.max_rel_deviation},
                   {"worst_m", compat.worst_m},
                   {"note", "failure is a warning: existence does not require the seam condition"}}},
                 {"scenario", serialize_scenario(s)}};
        const std::string path = (fs::path(out_dir) / "validation.json").string();
        atomic_write(path, doc.dump(2) + "\n");
        r.artifacts.push_back(path);
        r.diagnostics_json = doc.dump(2);
        return r;
    } catch (const std::exception& e) {
        return fail_result(s, out_dir, e.what());
    }
}

namespace {

RunResult simulate_impl(const Scenario& s, const std::string& out_dir, bool audit_mode) {
    try {
        const auto t0 = std::chrono::steady_clock::now();
        Session session = build_session(s);
        const SolveResult sol = solve(session.data, session.maps, s.horizon, session.grid,
                                      session.options);

        // For a Hill reintroduction the near-zero Lipschitz bound is global,
        // so the certificate neighborhood can be grown to enclose the data;
        // otherwise the scenario's eps is the honest radius. The envelope is
        // asserted only when the data actually lies in the certified ball.
        const double mu_norm = sup_grid(session.data.mu_bar, sol.N.m);
        const double gamma_norm = gamma_sup_on_domain(session.data, session.maps);
        double eps_eff = s.eps;
        if (session.coeffs.reintroduction.is_hill()) {
            const double L0 = session.coeffs.reintroduction.beta0_sup();
            eps_eff = std::max(eps_eff, mu_norm);
            if (L0 > 0.0) eps_eff = std::max(eps_eff, gamma_norm / L0);
        }
        const StabilityCertificate cert =
            stability_certificate(session.coeffs, session.maps, eps_eff);
        const bool in_ball = mu_norm <= eps_eff * (1.0 + 1e-12) &&
                             gamma_norm <= eps_eff * cert.lipschitz * (1.0 + 1e-12);
        const DecayFit decay = decay_rate_estimate(sol.N, session.maps.tau_max(),
                                                   in_ball && cert.feasible ? &cert : nullptr);
        const PositivityReport pos =
            positivity_audit(sol.N, sol.P, session.data, session.maps, s.seed);
        const CompatReport compat = check_compatibility(session.data, session.coeffs, 1e-9);
        const auto t1 = std::chrono::steady_clock::now();

        RunResult r;
        json doc{{"mode", audit_mode ? "audit" : "simulate"},
                 {"scenario", serialize_scenario(s)},
                 {"seed", s.seed},
                 {"grid",
                  {{"dt", sol.diagnostics.dt},
                   {"maturity_nodes", sol.diagnostics.maturity_nodes},
                   {"horizon", sol.diagnostics.horizon},
                   {"tau_max", sol.diagnostics.tau_max},
                   {"tau_delta_min", sol.diagnostics.tau_delta_min}}},
                 {"solver",
                  {{"residual_sup", sol.diagnostics.residual_sup},
                   {"kernel_bound", sol.diagnostics.kernel_bound},
                   {"zeta_norm", sol.diagnostics.zeta_norm},
                   {"lipschitz", sol.diagnostics.lipschitz},
                   {"windows", json::array()}}},
                 {"certificate", certificate_json(cert)},
                 {"ball",
                  {{"mu_norm", mu_norm}, {"gamma_norm", gamma_norm}, {"in_ball", in_ball}}},
                 {"decay",
                  {{"rate", decay.rate},
                   {"rate_with_m0", decay.rate_with_m0},
                   {"prefactor", decay.prefactor},
                   {"rms", decay.rms},
                   {"infinite_decay", decay.infinite_decay},
                   {"envelope_checked", decay.envelope_checked},
                   {"envelope_ok", decay.envelope_ok},
                   {"envelope_violations", decay.envelope_violations}}},
                 {"positivity",
                  {{"min_N", pos.min_N},
                   {"min_P", pos.min_P},
                   {"regulation_ok", pos.regulation_ok},
                   {"data_nonnegative", pos.data_nonnegative},
                   {"applicable", pos.applicable},
                   {"pass", pos.pass},
                   {"min_group_reintroduction", pos.min_group_reintroduction},
                   {"min_group_birth", pos.min_group_birth},
                   {"seed", pos.seed}}},
                 {"compatibility",
                  {{"pass", compat.pass}, {"max_rel_deviation", compat.max_rel_deviation}}},
                 {"elapsed_seconds",
                  std::chrono::duration<double>(t1 - t0).count()}};
        for (const auto& w : sol.diagnostics.windows)
            doc["solver"]["windows"].push_back(window_json(w));

        const std::string field_path = (fs::path(out_dir) / "field.csv").string();
        write_fields_csv(field_path, sol.N, sol.P);
        r.artifacts.push_back(field_path);
        if (s.dump_maps) {
            const std::string maps_path = (fs::path(out_dir) / "maps.csv").string();
            write_maps_csv(maps_path, session.maps);
            r.artifacts.push_back(maps_path);
        }
        const std::string diag_path =
            (fs::path(out_dir) / (audit_mode ? "audit.json" : "diagnostics.json")).string();
        atomic_write(diag_path, doc.dump(2) + "\n");
        r.artifacts.push_back(diag_path);
        r.diagnostics_json = doc.dump(2);
        r.status = 0;
        return r;
    } catch (const std::exception& e) {
        return fail_result(s, out_dir, e.what());
    }
}

}  // namespace

RunResult run_simulation(const Scenario& s, const std::string& out_dir) {
    return simulate_impl(s, out_dir, false);
}

RunResult run_audit(const Scenario& s, const std::string& out_dir) {
    return simulate_impl(s, out_dir, true);
}

RunResult run_dump_maps(const Scenario& s, const std::string& out_dir) {
    try {
        Session session = build_session(s);
        RunResult r;
        const std::string maps_path = (fs::path(out_dir) / "maps.csv").string();
        write_maps_csv(maps_path, session.maps);
        r.artifacts.push_back(maps_path);
        json doc{{"mode", "dump-maps"},
                 {"tau_max", session.maps.tau_max()},
                 {"tau_delta_min", session.maps.tau_delta_min()},
                 {"kappa", session.maps.kappa()},
                 {"zeta_norm", session.maps.zeta_norm()},
                 {"g1", session.maps.g1()},
                 {"scenario", serialize_scenario(s)}};
        const std::string diag_path = (fs::path(out_dir) / "maps.json").string();
        atomic_write(diag_path, doc.dump(2) + "\n");
        r.artifacts.push_back(diag_path);
        r.diagnostics_json = doc.dump(2);
        return r;
    } catch (const std::exception& e) {
        return fail_result(s, out_dir, e.what());
    }
}

RunResult run_sweep(const Scenario& s, const std::string& out_dir) {
    try {
        struct Point {
            std::vector<std::pair<std::string, double>> params;
            bool verdict = false;
            double margin = 0.0, rho = 0.0, fitted = 0.0;
            bool agreement = true;
            std::string status = "ok";
        };
        std::vector<Point> points;
        auto axis_values = [](const Scenario::Axis& ax) {
            std::vector<double> vs;
            for (int k = 0; k < ax.steps; ++k)
                vs.push_back(ax.steps == 1
                                 ? ax.from
                                 : ax.from + (ax.to - ax.from) * k / (ax.steps - 1));
            return vs;
        };
        if (s.axes.empty()) {
            // no axes: empty table
        } else if (s.axes.size() == 1) {
            for (double v : axis_values(s.axes[0]))
                points.push_back({{{s.axes[0].param, v}}, false, 0, 0, 0, true, "ok"});
        } else {
            for (double v1 : axis_values(s.axes[0]))
                for (double v2 : axis_values(s.axes[1]))
                    points.push_back(
                        {{{s.axes[0].param, v1}, {s.axes[1].param, v2}}, false, 0, 0, 0, true, "ok"});
        }

        num::parallel_for(points.size(), s.threads, [&](std::size_t i) {
            Point& pt = points[i];
            try {
                Scenario local = s;
                local.threads = 1;
                for (const auto& [name, v] : pt.params) {
                    if (name == "beta0") local.beta0 = v;
                    else if (name == "delta0") local.delta0 = v;
                    else if (name == "gamma0") local.gamma0 = v;
                    else if (name == "alpha") local.alpha = v;
                }
                Session session = build_session(local);
                const StabilityCertificate cert =
                    stability_certificate(session.coeffs, session.maps, local.eps);
                pt.verdict = cert.local_both_ok;
                pt.margin = cert.margin;
                pt.rho = cert.rho;
                const SolveResult sol = solve(session.data, session.maps, s.sweep_horizon,
                                              session.grid, session.options);
                const DecayFit fit = decay_rate_estimate(sol.N, session.maps.tau_max(), &cert);
                pt.fitted = fit.infinite_decay ? std::numeric_limits<double>::infinity()
                                               : fit.rate;
                pt.agreement = !pt.verdict || pt.fitted > 0.0;
            } catch (const std::exception& e) {
                pt.status = e.what();
            }
        });

        std::string csv;
        csv += s.axes.empty() ? "value" : s.axes[0].param;
        if (s.axes.size() > 1) csv += "," + s.axes[1].param;
        csv += ",verdict,margin,rho,fitted_decay,agreement,status\n";
        for (const auto& pt : points) {
            csv += fmt17(pt.params.empty() ? 0.0 : pt.params[0].second);
            if (s.axes.size() > 1) csv += "," + fmt17(pt.params[1].second);
            csv += pt.verdict ? ",true," : ",false,";
            csv += fmt17(pt.margin);
            csv += ',';
            csv += fmt17(pt.rho);
            csv += ',';
            csv += fmt17(pt.fitted);
            csv += pt.agreement ? ",true," : ",false,";
            csv += (pt.status == "ok") ? "ok" : ("\"" + pt.status + "\"");
            csv += '\n';
        }
        RunResult r;
        const std::string path = (fs::path(out_dir) / "sweep.csv").string();
        atomic_write(path, csv);
        r.artifacts.push_back(path);
        json doc{{"mode", "sweep"},
                 {"points", points.size()},
                 {"scenario", serialize_scenario(s)}};
        const std::string diag_path = (fs::path(out_dir) / "sweep.json").string();
        atomic_write(diag_path, doc.dump(2) + "\n");
        r.artifacts.push_back(diag_path);
        r.diagnostics_json = doc.dump(2);
        return r;
    } catch (const std::exception& e) {
        return fail_result(s, out_dir, e.what());
    }
}

RunResult run_scenario(const Scenario& s, const std::string& out_dir) {
    if (s.mode == "validate") return run_validate(s, out_dir);
    if (s.mode == "simulate") return run_simulation(s, out_dir);
    if (s.mode == "audit") return run_audit(s, out_dir);
    if (s.mode == "sweep") return run_sweep(s, out_dir);
    if (s.mode == "dump-maps") return run_dump_maps(s, out_dir);
    return fail_result(s, out_dir, "unknown run mode '" + s.mode + "'");
}

}  // namespace matpop
