import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from su12hitchin import spectral as spc
from su12hitchin.errors import DomainError

_MP = {"J0": lambda x: mpmath.besselj(0, x), "J1": lambda x: mpmath.besselj(1, x),
       "Y0": lambda x: mpmath.bessely(0, x), "Y1": lambda x: mpmath.bessely(1, x),
       "I0": lambda x: mpmath.besseli(0, x), "I1": lambda x: mpmath.besseli(1, x)}


@pytest.mark.parametrize("kind", sorted(_MP))
@given(x=st.floats(0.05, 40.0))
def test_bessel_matches_arbitrary_precision(kind, x):
    ref = float(_MP[kind](x))
    assert spc.bessel_eval(kind, x) == pytest.approx(ref, rel=1e-12, abs=1e-14)


@given(st.floats(0.1, 60.0))
def test_cylinder_wronskian(x):
    j0, j1, y0, y1 = (spc.bessel_eval(k, x) for k in ("J0", "J1", "Y0", "Y1"))
    assert j1 * y0 - j0 * y1 == pytest.approx(2 / (math.pi * x), rel=1e-10)


@given(st.floats(0.1, 600.0))
def test_scaled_modified_bessel(x):
    assert spc.bessel_eval("I0E", x) == pytest.approx(float(mpmath.besseli(0, x) * mpmath.exp(-x)), rel=1e-12)


def test_first_zero_of_j0_by_bisection():
    lo, hi = 2.0, 3.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if spc.bessel_eval("J0", lo) * spc.bessel_eval("J0", mid) <= 0:
            hi = mid
        else:
            lo = mid
    assert 0.5 * (lo + hi) == pytest.approx(2.404825557695773, abs=1e-10)


def test_bessel_domain_errors():
    with pytest.raises(DomainError):
        spc.bessel_eval("Y0", 0.0)
    with pytest.raises(DomainError):
        spc.bessel_eval("K0", 1.0)


def test_well_spec_validation():
    with pytest.raises(DomainError):
        spc.WellSpec(0.5)
    with pytest.raises(DomainError):
        spc.WellSpec(10.0, A=-1.0)


def test_secular_sign_change_brackets_root():
    spec = spc.WellSpec(10.0)
    lam = spc.lambda1_of_t(spec)
    assert spc.secular_delta(spec, 0.99 * lam) * spc.secular_delta(spec, 1.01 * lam) < 0


def test_secular_root_matches_fd_oracle():
    spec = spc.WellSpec(10.0)
    assert spc.lambda1_of_t(spec) == pytest.approx(spc.fd_neumann_oracle(spec, 1024), rel=1e-2)


def test_large_t_does_not_overflow():
    lam = spc.lambda1_of_t(spc.WellSpec(1e8))
    assert np.isfinite(lam) and lam > 0


def test_eigenvalue_decreases_to_zero():
    lams = [spc.lambda1_of_t(spc.WellSpec(t)) for t in (1e2, 1e4, 1e6, 1e8)]
    assert all(a > b for a, b in zip(lams, lams[1:]))
    assert lams[-1] < 0.5 * lams[0]


def test_fd_oracle_without_potential_is_zero():
    assert spc.fd_neumann_oracle(spc.WellSpec(10.0), 256, potential=False) == pytest.approx(0.0, abs=1e-12)


def test_fd_oracle_second_order_refinement():
    spec = spc.WellSpec(10.0)
    a, b, c = (spc.fd_neumann_oracle(spec, n) for n in (256, 512, 1024))
    assert abs(a - b) / abs(b - c) == pytest.approx(4.0, rel=0.25)


def test_bound_products_are_bounded():
    res = spc.bound_products([1e2, 1e4, 1e6, 1e8])
    assert np.min(res.lower_product) > 0.1
    assert np.max(res.upper_product) < 10.0
