"""Maturity-structured two-phase cell population solver.

Thin wrapper over the C++ core: scenario handling, commitment geometry,
the windowed fixed-point solver, and the stability/positivity audits.
"""

from ._core import (  # noqa: F401
    DecayFit,
    MatpopError,
    Model,
    PositivityReport,
    Scenario,
    SolutionField,
    SolveResult,
    StabilityCertificate,
    ValidationReport,
    bundled_scenarios,
    certificate,
    decay_fit,
    load_scenario,
    parse_scenario,
    positivity_audit,
    run,
    serialize_scenario,
    solve_custom,
    solve_scenario,
    validate,
    __version__,
)

__all__ = [
    "DecayFit",
    "MatpopError",
    "Model",
    "PositivityReport",
    "Scenario",
    "SolutionField",
    "SolveResult",
    "StabilityCertificate",
    "ValidationReport",
    "bundled_scenarios",
    "certificate",
    "decay_fit",
    "load_scenario",
    "parse_scenario",
    "positivity_audit",
    "run",
    "serialize_scenario",
    "solve_custom",
    "solve_scenario",
    "validate",
    "__version__",
]
