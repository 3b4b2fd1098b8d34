import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from su12hitchin import gluing as gl
from su12hitchin.errors import ConfigurationError, DomainError


@pytest.fixture(scope="module")
def r_spec(model0):
    return gl.GluedMetricSpec("r", 8.0, 1.0, lam=0.0, model=model0)


def test_cutoff_examples():
    assert gl.cutoff_chi(0.0, 3.0) == 1.0
    assert gl.cutoff_chi(3.0, 3.0) == 0.0
    assert gl.cutoff_chi(1.5, 3.0) == pytest.approx(0.5, abs=1e-15)


@given(st.floats(0.1, 10.0), st.floats(0.0, 1.5), st.floats(0.0, 1.5))
def test_cutoff_bounded_and_monotone(R, x, y):
    a, b = sorted((x * R, y * R))
    ca, cb = gl.cutoff_chi(a, R), gl.cutoff_chi(b, R)
    assert 0.0 <= cb <= ca <= 1.0


@given(st.floats(0.5, 5.0), st.floats(0.34, 0.66))
def test_cutoff_derivatives_match_differences(R, frac):
    rho, h = frac * R, 1e-4 * R
    d1, d2 = gl.cutoff_chi_derivatives(rho, R)
    c = [gl.cutoff_chi(rho + k * h, R) for k in (-1, 0, 1)]
    assert d1 == pytest.approx((c[2] - c[0]) / (2 * h), abs=1e-5 / R)
    assert d2 == pytest.approx((c[2] - 2 * c[1] + c[0]) / h**2, abs=1e-3 / R**2)


def test_cutoff_rejects_bad_input():
    with pytest.raises(DomainError):
        gl.cutoff_chi(0.5, 0.0)
    with pytest.raises(DomainError):
        gl.cutoff_chi(-0.5, 1.0)


def test_zero_type_parsing():
    assert gl.ZeroType.parse("R") is gl.ZeroType.R
    with pytest.raises(DomainError):
        gl.ZeroType.parse("delta")


@pytest.mark.parametrize("kind,power", [("gamma", -0.5), ("beta", 0.5)])
def test_diagonal_types_outside_cutoff(psol, kind, power):
    spec = gl.GluedMetricSpec(kind, 8.0, 1.0, painleve=psol)
    for rho in (2 / 3, 0.8, 1.0):
        h = gl.H_app_at(spec, rho * np.exp(0.3j))
        assert h.a11 == pytest.approx(rho**power, rel=1e-15)
        assert h.a22 == 1.0 and h.a12 == 0


def test_missing_handles_raise():
    with pytest.raises(ConfigurationError):
        gl.H_app_at(gl.GluedMetricSpec("r", 8.0, 1.0, lam=0.0), 0.5)
    with pytest.raises(ConfigurationError):
        gl.H_app_at(gl.GluedMetricSpec("gamma", 8.0, 1.0), 0.5)


def test_points_outside_disk_raise(r_spec):
    with pytest.raises(DomainError):
        gl.H_app_at(r_spec, 1.5)


def test_regular_frame_continuous_at_inner_cutoff(r_spec):
    a = gl.H_app_at(r_spec, 1 / 3 - 1e-9, frame="regular").array
    b = gl.H_app_at(r_spec, 1 / 3 + 1e-9, frame="regular").array
    assert np.max(np.abs(a - b)) <= 1e-6


def test_exterior_branch_solves_equation(r_spec):
    def sampler(z):
        return gl.H_app_field(r_spec, z, frame="regular")

    res, _ = gl.hitchin_residual_field(sampler, gl.local_higgs_forms("r"), r_spec.t, (0.7, 0.95), grid=(128, 64))
    assert res <= 1e-7


def test_interior_exterior_mismatch_decays(model0):
    vals = [gl.interior_exterior_mismatch(gl.GluedMetricSpec("r", t, 1.0, lam=0.0, model=model0), [2 / 3]) for t in (4.0, 8.0, 16.0)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-5


def test_decoupled_local_identity():
    assert np.allclose(gl.decoupled_local(1.0, 1.0).array, np.eye(2))
    with pytest.raises(DomainError):
        gl.decoupled_local(0.0, 1.0)


def test_decoupled_weight_reproduces_asymptote_symbolically():
    c, t, rho = sp.symbols("c t rho", positive=True)
    lam = sp.Symbol("lam", real=True)
    u = t ** sp.Rational(2, 3) * rho
    f = c / 4 * t ** (4 * lam / 3) * rho ** (2 * lam)
    asym = (t ** sp.Rational(2, 3) * 16 / c**2 * u ** (-1 - 4 * lam), t ** sp.Rational(2, 3) * c / 4 * u ** (2 * lam - 1))
    local = (1 / (f**2 * rho), f / rho)
    for a, b in zip(asym, local):
        assert sp.simplify(sp.powsimp(sp.expand_power_base(a / b, force=True), force=True)) == 1


@given(st.floats(0.5, 8.0), st.floats(-0.2, 0.2), st.floats(1.0, 50.0), st.floats(0.1, 1.0))
def test_decoupled_weight_numeric(c, lam, t, rho):
    from su12hitchin import localmodel as lm

    f = gl.decoupled_weight(c, lam, t, rho)
    t23 = t ** (2 / 3)
    ref = lm.M_infty_lambda(lm.AsymptoticModel(lam, c), t23 * rho)
    h = gl.decoupled_local(f, rho)
    assert h.a11 == pytest.approx(t23 * ref.a11, rel=1e-10)
    assert h.a22 == pytest.approx(t23 * ref.a22, rel=1e-10)


def test_sweep_needs_two_values():
    with pytest.raises(DomainError):
        gl.residual_sweep("gamma", [8.0])
