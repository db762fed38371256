"""Smoke tests for the python bindings: closed-form values on the linear
family, a trivial solve, and the certificate arithmetic."""

import math

import numpy as np
import pytest

import matpop


@pytest.fixture(scope="module")
def canonical():
    return matpop.load_scenario("linear_stable")


@pytest.fixture(scope="module")
def model(canonical):
    return matpop.Model(canonical)


def test_version():
    assert matpop.__version__


def test_preset_constants(canonical):
    assert canonical.alpha == 0.2
    assert canonical.tau0 == 1.0
    assert canonical.g_slope == 0.5
    assert canonical.beta0 == 0.04


def test_scenario_roundtrip(canonical):
    text = matpop.serialize_scenario(canonical)
    back = matpop.parse_scenario(text)
    assert matpop.serialize_scenario(back) == text


def test_bad_scenario_raises():
    with pytest.raises(matpop.MatpopError):
        matpop.parse_scenario("")


def test_closed_form_geometry(model):
    assert model.chi(-1.0, 0.5) == pytest.approx(0.5 * math.exp(-0.2), rel=1e-10)
    assert model.time_of_flight(0.5, 1.0) == pytest.approx(math.log(2.0) / 0.2, rel=1e-10)
    assert model.theta(1.0) == pytest.approx(math.exp(-0.2), rel=1e-8)
    assert model.delta(0.3) == pytest.approx(0.6 * math.exp(-0.2), rel=1e-8)
    assert model.zeta(0.25) == pytest.approx(4.0 * math.exp(-0.3), rel=1e-8)
    assert model.zeta(0.7) == 0.0
    assert model.resting_survival(2.0, 0.4) == pytest.approx(math.exp(-0.5), rel=1e-10)
    assert model.beta(0.3, 0.5) == pytest.approx(0.02, rel=1e-12)
    assert model.kappa == pytest.approx(2.0)


def test_certificate_margin(model):
    cert = matpop.certificate(model, eps=0.01)
    assert cert.margin == pytest.approx(0.05, abs=1e-15)
    assert cert.local_both_ok
    assert cert.feasible
    assert 0.0 < cert.rho < cert.delta_tilde


def test_trivial_solve_is_zero():
    s = matpop.load_scenario("trivial")
    s.horizon = 2.0
    result = matpop.solve_scenario(s)
    assert np.abs(result.N.values).max() < 1e-12
    assert np.abs(result.P.values).max() < 1e-12


def test_canonical_solve_and_audit(canonical):
    s = matpop.load_scenario("linear_stable")
    s.horizon = 2.0
    s.maturity_nodes = 80
    s.min_cell = 1e-3
    result = matpop.solve_scenario(s)
    assert result.residual < 1e-8
    model = matpop.Model(s)
    audit = matpop.positivity_audit(model, s, result)
    assert audit.applicable
    assert audit.passed
    # initial row carries the initial data
    zero_row = np.argmin(np.abs(result.N.t))
    m = np.asarray(result.N.m)
    np.testing.assert_allclose(result.N.values[zero_row], 0.1 - 0.05 * m, rtol=1e-12)


def test_custom_data_solve():
    s = matpop.load_scenario("trivial")
    s.maturity_nodes = 60
    s.min_cell = 1e-3
    model = matpop.Model(s)
    result = matpop.solve_custom(model, lambda m: 0.05, lambda m, a: 0.0, 3.0)
    fit = matpop.decay_fit(result.N, model.tau_max)
    assert not fit.infinite_decay
    assert fit.rate > 0.0
