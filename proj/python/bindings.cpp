// Python bindings for the core operations: scenario handling, commitment
// geometry, the solver, and the analysis audits.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "matpop/analysis.hpp"
#include "matpop/errors.hpp"
#include "matpop/runner.hpp"

namespace py = pybind11;
using namespace matpop;

namespace {

py::array_t<double> field_values(const SolutionField& f) {
    py::array_t<double> arr({f.nt, f.nm()});
    auto buf = arr.mutable_unchecked<2>();
    for (int i = 0; i < f.nt; ++i)
        for (int j = 0; j < f.nm(); ++j) buf(i, j) = f.at(i, j);
    return arr;
}

py::array_t<double> vector_array(const std::vector<double>& v) {
    py::array_t<double> arr(std::vector<py::ssize_t>{(py::ssize_t)v.size()});
    std::copy(v.begin(), v.end(), arr.mutable_data());
    return arr;
}

py::array_t<double> field_times(const SolutionField& f) {
    std::vector<double> t(f.nt);
    for (int i = 0; i < f.nt; ++i) t[i] = f.time(i);
    return vector_array(t);
}

InitialData data_from_callables(const ModelCoefficients& coeffs,
                                const std::function<double(double)>& mu,
                                const std::function<double(double, double)>& gamma) {
    InitialData d;
    d.mu_bar = mu;
    if (gamma) {
        d.gamma = gamma;
    } else {
        d.gamma = [](double, double) { return 0.0; };
    }
    (void)coeffs;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Maturity-structured two-phase cell population solver";

    py::register_exception<Error>(m, "MatpopError");

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("alpha", &Scenario::alpha)
        .def_readwrite("p", &Scenario::p)
        .def_readwrite("tau_family", &Scenario::tau_family)
        .def_readwrite("tau0", &Scenario::tau0)
        .def_readwrite("tau1", &Scenario::tau1)
        .def_readwrite("g_slope", &Scenario::g_slope)
        .def_readwrite("delta0", &Scenario::delta0)
        .def_readwrite("gamma0", &Scenario::gamma0)
        .def_readwrite("beta0", &Scenario::beta0)
        .def_readwrite("beta_theta", &Scenario::beta_theta)
        .def_readwrite("hill_n", &Scenario::hill_n)
        .def_readwrite("mu_family", &Scenario::mu_family)
        .def_readwrite("mu0", &Scenario::mu0)
        .def_readwrite("mu1", &Scenario::mu1)
        .def_readwrite("gamma_mode", &Scenario::gamma_mode)
        .def_readwrite("age_rate", &Scenario::age_rate)
        .def_readwrite("maturity_nodes", &Scenario::maturity_nodes)
        .def_readwrite("min_cell", &Scenario::min_cell)
        .def_readwrite("dt", &Scenario::dt)
        .def_readwrite("dt_factor", &Scenario::dt_factor)
        .def_readwrite("mode", &Scenario::mode)
        .def_readwrite("horizon", &Scenario::horizon)
        .def_readwrite("tol", &Scenario::tol)
        .def_readwrite("q_target", &Scenario::q_target)
        .def_readwrite("seed", &Scenario::seed)
        .def_readwrite("threads", &Scenario::threads)
        .def_readwrite("eps", &Scenario::eps)
        .def_readwrite("out", &Scenario::out)
        .def("__repr__",
             [](const Scenario& s) { return "<Scenario mode=" + s.mode + ">"; });

    m.def("load_scenario", &load_scenario, py::arg("path"),
          "Load a scenario file or bundled preset by name");
    m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("origin") = "<string>");
    m.def("serialize_scenario", &serialize_scenario);
    m.def("bundled_scenarios", [] { return bundled_scenarios(); });

    py::class_<SolutionField>(m, "SolutionField")
        .def_property_readonly("t", &field_times)
        .def_property_readonly("m",
                               [](const SolutionField& f) { return vector_array(f.m); })
        .def_property_readonly("values", &field_values)
        .def("eval", &SolutionField::eval, py::arg("t"), py::arg("m"))
        .def_property_readonly("dt", [](const SolutionField& f) { return f.dt; })
        .def_property_readonly("t_begin", [](const SolutionField& f) { return f.t_begin; });

    // A built model: coefficients plus the tabulated commitment geometry.
    py::class_<Session>(m, "Model")
        .def(py::init([](const Scenario& s) {
                 return new Session(build_session(s));
             }),
             py::arg("scenario"))
        .def("chi", [](const Session& s, double t, double m) { return s.maps.flow().chi(t, m); },
             py::arg("s"), py::arg("m"), "Backward characteristic flow, s <= 0")
        .def("time_of_flight",
             [](const Session& s, double m1, double m2) {
                 return s.maps.flow().time_of_flight(m1, m2);
             })
        .def("theta", [](const Session& s, double m) { return s.maps.theta(m); },
             "Commitment maturity of a cell dividing at maturity m")
        .def("delta", [](const Session& s, double m) { return s.maps.delta(m); },
             "Commitment maturity of the mother of a daughter born at m")
        .def("g_inverse", [](const Session& s, double m) { return s.maps.g_inverse(m); })
        .def("pi_factor", [](const Session& s, double m) { return s.maps.pi_factor(m); })
        .def("zeta", [](const Session& s, double m) { return s.maps.zeta(m); })
        .def("resting_survival",
             [](const Session& s, double t, double m) { return s.maps.kernel_resting()(t, m); })
        .def("proliferating_survival",
             [](const Session& s, double t, double m) {
                 return s.maps.kernel_proliferating()(t, m);
             })
        .def("beta", [](const Session& s, double m, double x) { return eval_beta(s.coeffs, m, x); })
        .def_property_readonly("tau_max", [](const Session& s) { return s.maps.tau_max(); })
        .def_property_readonly("kappa", [](const Session& s) { return s.maps.kappa(); })
        .def_property_readonly("zeta_norm", [](const Session& s) { return s.maps.zeta_norm(); });

    py::class_<ValidationReport>(m, "ValidationReport")
        .def_property_readonly("ok", &ValidationReport::ok)
        .def("summary", &ValidationReport::summary);

    m.def(
        "validate",
        [](const Scenario& s, int grid) {
            return validate_coefficients(coefficients_from_scenario(s), grid);
        },
        py::arg("scenario"), py::arg("grid_resolution") = 1000);

    py::class_<StabilityCertificate>(m, "StabilityCertificate")
        .def_readonly("delta_tilde", &StabilityCertificate::delta_tilde)
        .def_readonly("gamma_tilde", &StabilityCertificate::gamma_tilde)
        .def_readonly("kappa", &StabilityCertificate::kappa)
        .def_readonly("lipschitz", &StabilityCertificate::lipschitz)
        .def_readonly("zeta_norm", &StabilityCertificate::zeta_norm)
        .def_readonly("rho", &StabilityCertificate::rho)
        .def_readonly("rho_sup", &StabilityCertificate::rho_sup)
        .def_readonly("c", &StabilityCertificate::c)
        .def_readonly("feasible", &StabilityCertificate::feasible)
        .def_readonly("margin", &StabilityCertificate::margin)
        .def_readonly("local_ok", &StabilityCertificate::local_ok)
        .def_readonly("local_both_ok", &StabilityCertificate::local_both_ok)
        .def_readonly("global_ok", &StabilityCertificate::global_ok);

    m.def(
        "certificate",
        [](const Session& session, double eps) {
            return stability_certificate(session.coeffs, session.maps, eps);
        },
        py::arg("model"), py::arg("eps") = 0.01);

    py::class_<SolveResult>(m, "SolveResult")
        .def_readonly("N", &SolveResult::N)
        .def_readonly("P", &SolveResult::P)
        .def_property_readonly("residual",
                               [](const SolveResult& r) { return r.diagnostics.residual_sup; })
        .def_property_readonly("windows", [](const SolveResult& r) {
            py::list out;
            for (const auto& w : r.diagnostics.windows)
                out.append(py::dict(py::arg("t_begin") = w.t_begin, py::arg("t_end") = w.t_end,
                                    py::arg("q") = w.contraction_q,
                                    py::arg("iterations") = w.iterations));
            return out;
        });

    m.def(
        "solve_scenario",
        [](const Scenario& s) {
            Session session = build_session(s);
            return solve(session.data, session.maps, s.horizon, session.grid, session.options);
        },
        py::arg("scenario"), "Solve the scenario's initial data over its horizon");

    m.def(
        "solve_custom",
        [](const Session& session, const std::function<double(double)>& mu,
           const std::function<double(double, double)>& gamma, double horizon) {
            return solve(data_from_callables(session.coeffs, mu, gamma), session.maps, horizon,
                         session.grid, session.options);
        },
        py::arg("model"), py::arg("mu_bar"), py::arg("gamma"), py::arg("horizon"),
        "Solve with python-supplied initial data callables");

    py::class_<PositivityReport>(m, "PositivityReport")
        .def_readonly("min_N", &PositivityReport::min_N)
        .def_readonly("min_P", &PositivityReport::min_P)
        .def_readonly("regulation_ok", &PositivityReport::regulation_ok)
        .def_readonly("applicable", &PositivityReport::applicable)
        .def_readonly("passed", &PositivityReport::pass);

    m.def(
        "positivity_audit",
        [](const Session& session, const Scenario& s, const SolveResult& r) {
            return positivity_audit(r.N, r.P, session.data, session.maps, s.seed);
        },
        py::arg("model"), py::arg("scenario"), py::arg("result"));

    py::class_<DecayFit>(m, "DecayFit")
        .def_readonly("rate", &DecayFit::rate)
        .def_readonly("prefactor", &DecayFit::prefactor)
        .def_readonly("infinite_decay", &DecayFit::infinite_decay)
        .def_readonly("envelope_checked", &DecayFit::envelope_checked)
        .def_readonly("envelope_ok", &DecayFit::envelope_ok);

    m.def(
        "decay_fit",
        [](const SolutionField& N, double t_start, const StabilityCertificate* cert) {
            return decay_rate_estimate(N, t_start, cert);
        },
        py::arg("N"), py::arg("t_start"), py::arg("certificate") = nullptr);

    m.def(
        "run",
        [](const Scenario& s, const std::string& out_dir) {
            const RunResult r = run_scenario(s, out_dir.empty() ? resolve_output_dir("", s)
                                                                : out_dir);
            return py::make_tuple(r.status, r.artifacts, r.diagnostics_json);
        },
        py::arg("scenario"), py::arg("out_dir") = std::string(),
        "Run a scenario end to end, returning (status, artifacts, diagnostics json)");

#ifdef MATPOP_VERSION
    m.attr("__version__") = MATPOP_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
