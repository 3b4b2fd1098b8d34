import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from su12hitchin import painleve
from su12hitchin.errors import DomainError


def test_sign_structure(psol):
    assert np.all(psol.psi > 0)
    assert np.all(psol.dpsi < 0)


def test_residual_below_tolerance(psol):
    assert psol.residual_max <= 1e-10


def test_independent_residual_oracle(psol):
    # Centered differences of the interpolant, independent of the solver stencil.
    x = np.geomspace(0.05, 8.0, 40)
    assert np.max(np.abs(painleve.ode_residual(psol, x))) <= 1e-5


def test_nodes_return_stored_values(psol):
    idx = [0, 17, len(psol.grid) // 2, len(psol.grid) - 1]
    psi, dpsi = painleve.eval_psi(psol, psol.grid[idx])
    assert np.array_equal(psi, psol.psi[idx])
    assert np.array_equal(dpsi, psol.dpsi[idx])


def test_small_x_logarithmic_behaviour(psol):
    x = np.geomspace(1e-8, 1e-3, 12)
    psi, _ = painleve.eval_psi(psol, x)
    shifted = psi + np.log(x) / 3.0
    assert np.ptp(shifted) < 1e-3


def test_decay_tail(psol):
    x_max = psol.x_max
    far, _ = painleve.eval_psi(psol, 2 * x_max)
    assert far < 1e-6 * psol.psi[-1]
    bounded = [painleve.eval_psi(psol, x)[0] * np.exp(x) * np.sqrt(x) for x in (8.0, 12.0, 16.0, 20.0)]
    assert np.ptp(bounded) < 0.05 * np.mean(bounded)


def test_tail_matches_bessel_k0(psol):
    # The linearized equation is solved by K0, so psi / K0 tends to a constant.
    from scipy.special import k0

    x = np.array([8.0, 12.0, 16.0, 20.0])
    ratio = painleve.eval_psi(psol, x)[0] / k0(x)
    assert np.ptp(ratio) < 5e-3 * np.mean(ratio)
    assert painleve.fit_tail_decay(psol).slope == pytest.approx(-1.0, abs=0.1)


def test_eta_range_and_small_x_bound(psol):
    x = np.geomspace(1e-6, 60.0, 400)
    e = painleve.eta(psol, x)
    assert np.all(e >= -1e-12) and np.all(e <= 0.125 + 1e-12)
    small = x < 1e-2
    assert np.max(e[small] / x[small] ** (4 / 3)) < 1.0
    assert painleve.eta(psol, 0.0) == 0.0


def test_eta_tends_to_one_eighth(psol):
    assert painleve.eta(psol, 10 * psol.x_max) == pytest.approx(0.125, abs=1e-6)


def test_eta_rejects_negative(psol):
    with pytest.raises(DomainError):
        painleve.eta(psol, -1.0)


def test_psi_p_composition(psol):
    assert painleve.psi_P(psol, 4.0, 1.0) == painleve.eval_psi(psol, 32.0 / 3.0)[0]
    assert painleve.psi_P(psol, 1.0, 0.0) == np.inf


@given(st.floats(0.1, 10.0), st.floats(0.01, 2.0))
def test_psi_p_scaling_invariance(t, rho):
    sol = painleve.default_solution()
    assert painleve.psi_P(sol, 8 * t, rho / 4) == pytest.approx(painleve.psi_P(sol, t, rho), rel=1e-12)


def test_psi_p_rejects_bad_input(psol):
    with pytest.raises(DomainError):
        painleve.psi_P(psol, 0.0, 1.0)
    with pytest.raises(DomainError):
        painleve.psi_P(psol, 1.0, -1.0)


def test_refinement_agreement(psol):
    coarse = painleve.solve_painleve(n_nodes=1024)
    x = np.geomspace(0.01, 10.0, 25)
    diff = np.abs(painleve.eval_psi(coarse, x)[0] - painleve.eval_psi(psol, x)[0])
    assert np.max(diff) < 1e-5
