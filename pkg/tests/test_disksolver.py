import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from su12hitchin import disksolver as ds
from su12hitchin.errors import DomainError, SolverError
from su12hitchin.polar import HiggsForms

T = 8.0
FLAT = HiggsForms(beta=np.zeros((1, 2)), gamma=np.zeros((1, 2)))


def _flat_field(n_r=17, n_a=16):
    rho = np.exp(np.linspace(np.log(0.5), 0.0, n_r))
    h = np.broadcast_to(np.eye(2, dtype=complex), (n_r, n_a, 2, 2)).copy()
    return ds.DiskField(rho, n_a, h, FLAT)


def _radial_bump(fld, power=1):
    s = np.log(fld.rho / fld.rho[0])
    out = (np.sin(np.pi * s / s[-1]) ** 2) ** power
    out[0] = out[-1] = 0.0
    return out


def _smooth_pair(fld):
    rad, th = _radial_bump(fld), fld.theta
    a = np.zeros(fld.shape + (4,))
    b = np.zeros(fld.shape + (4,))
    a[..., 0] = rad[:, None] * (1 + np.cos(th))[None]
    a[..., 2] = 0.5 * rad[:, None] * np.sin(2 * th)[None]
    b[..., 3] = (rad**2)[:, None] * np.cos(th)[None]
    b[..., 0] = 0.3 * rad[:, None]
    for c in (a, b):
        c[0] = c[-1] = 0.0
    return ds.PauliField(a), ds.PauliField(b)


@pytest.fixture(scope="module")
def seeds(model0):
    return {g: ds.seed_field("r", T, kind="exact", grid=g, model=model0) for g in ((17, 16), (33, 32), (33, 16))}


# Pauli coefficients


def test_sigma3_coefficients():
    s3 = ds._SIGMA[3]
    assert np.allclose(ds.pauli_decompose(s3).coeffs, [0, 0, 0, 1], atol=1e-15)


def test_identity_coefficients_by_exact_inversion():
    # Columns of the basis matrix are the real coordinates (U11, U22, Re U12, Im U12) of each sigma_k.
    cols = [[sp.nsimplify(s[0, 0].real), sp.nsimplify(s[1, 1].real), sp.nsimplify(s[0, 1].real), sp.nsimplify(s[0, 1].imag)] for s in ds._SIGMA]
    basis = sp.Matrix(cols).T
    expected = basis.inv() * sp.Matrix([1, 1, 0, 0])
    got = ds.pauli_decompose(np.eye(2)).coeffs
    assert np.allclose(got, [float(v) for v in expected], atol=1e-15)
    assert got[0] == pytest.approx(2.0)


@given(arrays(float, (5, 4), elements=st.floats(-100, 100)))
def test_pauli_round_trip(c):
    m = ds.pauli_compose(c)
    assert np.allclose(m, np.conj(np.swapaxes(m, -1, -2)))
    assert np.allclose(ds.pauli_decompose(m).coeffs, c, atol=1e-12 * (1 + np.max(np.abs(c))))
    assert np.allclose(np.trace(m, axis1=-2, axis2=-1).real, c[:, 0])


def test_pauli_rejects_non_hermitian():
    with pytest.raises(DomainError):
        ds.pauli_decompose(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(DomainError):
        ds.PauliField(np.zeros((3, 3)))


# Fields and algebraic term


def test_disk_field_validation():
    fld = _flat_field()
    bad = fld.H.copy()
    bad[3, 2] = np.diag([1.0, -1.0])
    with pytest.raises(DomainError):
        fld.with_metric(bad)


@given(st.floats(0.2, 5.0), st.floats(0.5, 20.0))
def test_decoupled_metric_cancels_algebraic_term(scale, t):
    forms = HiggsForms(beta=np.array([[0, 1]]), gamma=np.array([[0, 1]]))
    fld = _flat_field(9, 8)
    h22 = scale * (1 + 0.5 * np.cos(fld.theta))[None, :] * fld.rho[:, None]
    h = np.zeros(fld.shape + (2, 2), dtype=complex)
    h[..., 0, 0] = h22**-2
    h[..., 1, 1] = h22
    out = ds.psi_beta_gamma(ds.DiskField(fld.rho, fld.n_a, h, forms), t)
    assert np.max(np.abs(out)) <= 1e-12 * t**2 * max(1.0, np.max(h22) ** 2)


# Linearized operator and quadratic form


def test_linearization_of_zero_is_zero(seeds):
    fld = seeds[(17, 16)]
    assert not np.any(ds.apply_Lt(fld, T, ds.PauliField(np.zeros(fld.shape + (4,))), accuracy=2))
    assert ds.quadratic_form_Qt(fld, T, np.zeros(fld.shape + (4,)), accuracy=2) == 0.0


def test_flat_linearization_is_minus_laplacian():
    fld = _flat_field()
    u = np.zeros(fld.shape + (4,))
    u[8, 5] = [1.0, 0.5, -0.3, 0.2]
    out = ds.apply_Lt(fld, 1.0, ds.PauliField(u), accuracy=2)
    v = ds.pauli_compose(u)
    lap = (np.roll(v, 1, 1) - 2 * v + np.roll(v, -1, 1)) / fld.ht**2
    lap[1:-1] += (v[2:] - 2 * v[1:-1] + v[:-2]) / fld.hs**2
    lap /= fld.rho[:, None, None, None] ** 2
    assert np.max(np.abs(out + lap)) <= 1e-9 * np.max(np.abs(lap))


def test_boundary_support_rejected(seeds):
    fld = seeds[(17, 16)]
    u = np.zeros(fld.shape + (4,))
    u[0, 0, 0] = 1.0
    with pytest.raises(DomainError):
        ds.apply_Lt(fld, T, ds.PauliField(u))


def test_pairing_symmetry_converges_at_second_order(seeds):
    gaps = []
    for g in ((17, 16), (33, 32)):
        fld = seeds[g]
        a, b = _smooth_pair(fld)
        x = ds.pairing(fld, ds.apply_Lt(fld, T, a, accuracy=2), b.matrix())
        y = ds.pairing(fld, a.matrix(), ds.apply_Lt(fld, T, b, accuracy=2))
        gaps.append(abs(x - y) / abs(x))
    assert gaps[1] <= 1e-3
    assert gaps[0] / gaps[1] >= 3.0


def test_quadratic_form_matches_pairing_under_refinement(seeds):
    gaps = []
    for g in ((17, 16), (33, 32)):
        fld = seeds[g]
        a, _ = _smooth_pair(fld)
        q = ds.quadratic_form_Qt(fld, T, a, accuracy=2)
        p = ds.pairing(fld, ds.apply_Lt(fld, T, a, accuracy=2), a.matrix())
        gaps.append(abs(q - p) / q)
    assert gaps[0] / gaps[1] >= 3.0


def test_quadratic_form_positive(seeds):
    fld = seeds[(17, 16)]
    u = np.zeros(fld.shape + (4,))
    u[..., 0] = _radial_bump(fld)[:, None]
    assert ds.quadratic_form_Qt(fld, T, u, accuracy=2) > 0
    rng = np.random.default_rng(3)
    for _ in range(5):
        v = np.zeros(fld.shape + (4,))
        v[1:-1] = rng.normal(size=v[1:-1].shape)
        assert ds.quadratic_form_Qt(fld, T, v, accuracy=2) >= 0


# Nonlinear solves


@pytest.mark.parametrize("scheme", ["newton", "picard"])
def test_small_grid_solve(seeds, scheme):
    seed = seeds[(33, 16)]
    res = ds.solve_hitchin_disk(seed, T, tol=1e-10, accuracy=2, scheme=scheme, max_iter=40)
    assert res.final_residual <= 1e-10
    assert np.array_equal(res.field.H[0], seed.H[0])
    assert np.array_equal(res.field.H[-1], seed.H[-1])
    assert max(res.hermitian_defects) <= 1e-13 * np.max(np.abs(seed.H))
    assert all(b < a for a, b in zip(res.residual_history, res.residual_history[1:]))
    if scheme == "newton":
        assert res.iterations <= 8


@pytest.mark.parametrize("accuracy,factor", [(2, 3.0), (4, 12.0)])
def test_distance_to_exact_model_has_formal_order(model0, accuracy, factor):
    errs = []
    for n_r in (33, 65):
        seed = ds.seed_field("r", T, kind="exact", grid=(n_r, 16), model=model0)
        res = ds.solve_hitchin_disk(seed, T, tol=1e-7, accuracy=accuracy)
        errs.append(ds.oracle_difference(res.field, seed))
    assert errs[0] / errs[1] >= factor


def test_max_iter_exhaustion(seeds):
    with pytest.raises(SolverError):
        ds.solve_hitchin_disk(seeds[(33, 16)], T, tol=1e-10, accuracy=2, max_iter=1)


def test_invalid_scheme(seeds):
    with pytest.raises(DomainError):
        ds.solve_hitchin_disk(seeds[(33, 16)], T, scheme="jacobi")
