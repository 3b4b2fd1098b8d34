import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from su12hitchin import weights as w
from su12hitchin.errors import ConfigurationError, DomainError

G2D0 = w.SurfaceData(2, 0)
Q = Fraction(1, 4)


def _c_interp(slope=0.0):
    lam = np.linspace(-0.249, 0.249, 21)
    return w.CInterpolant(lam, 4.0 * np.exp(slope * lam))


def test_stability_examples():
    assert w.check_stability(G2D0, w.ZeroPartition(1, 1, 2)) is w.Stability.STABLE
    assert w.check_stability(G2D0, w.ZeroPartition(2, 2, 0)) is w.Stability.STRICTLY_POLYSTABLE
    # With d = 1 and g = 2 nothing is stable; only the equality case is polystable.
    g2d1 = w.SurfaceData(2, 1)
    kinds = [w.check_stability(g2d1, p) for p in w.enumerate_partitions(g2d1)]
    assert w.Stability.STABLE not in kinds
    assert kinds.count(w.Stability.STRICTLY_POLYSTABLE) == 1


def test_inconsistent_partition_raises():
    with pytest.raises(DomainError):
        w.check_stability(G2D0, w.ZeroPartition(1, 1, 1))
    with pytest.raises(DomainError):
        w.SurfaceData(1, 0)


@given(st.integers(2, 5), st.integers(-4, 4), st.data())
def test_stability_agrees_with_face_feasibility(genus, deg, data):
    surface = w.SurfaceData(genus, deg)
    part = data.draw(st.sampled_from(w.enumerate_partitions(surface)))
    assert w.check_stability(surface, part) is w.stability_by_feasibility(surface, part)


def test_barycenter_examples():
    assert list(w.barycenter(G2D0, w.ZeroPartition(0, 0, 4))) == [0, 0, 0, 0]
    assert list(w.barycenter(G2D0, w.ZeroPartition(1, 0, 3))) == [Q, Fraction(-1, 12), Fraction(-1, 12), Fraction(-1, 12)]
    with pytest.raises(DomainError):
        w.barycenter(G2D0, w.ZeroPartition(2, 2, 0))


def test_vertex_counts():
    assert len(w.polytope_vertices(G2D0, w.ZeroPartition(0, 0, 4))) == math.comb(4, 2)
    assert len(w.polytope_vertices(G2D0, w.ZeroPartition(1, 0, 3))) == math.comb(3, 1)
    with pytest.raises(DomainError):
        w.polytope_vertices(G2D0, w.ZeroPartition(4, 0, 0))


@given(st.integers(2, 4), st.integers(-3, 3), st.data())
def test_barycenter_is_mean_of_vertices(genus, deg, data):
    surface = w.SurfaceData(genus, deg)
    stable = [p for p in w.enumerate_partitions(surface) if w.check_stability(surface, p) is w.Stability.STABLE]
    if not stable:
        return
    part = data.draw(st.sampled_from(stable))
    verts = w.polytope_vertices(surface, part)
    mean = [sum(col, Fraction(0)) / len(verts) for col in zip(*verts)]
    center = w.barycenter(surface, part)
    assert mean == list(center)
    assert w.is_admissible(center, surface, part)
    assert all(sum(v) == -deg for v in verts)


def test_admissibility_boundaries():
    part = w.ZeroPartition(0, 0, 4)
    assert not w.is_admissible([Q, -Q, 0, 0], G2D0, part)
    assert not w.is_admissible([Fraction(1, 8), 0, 0, 0], G2D0, part)
    assert w.is_admissible([Fraction(1, 8), Fraction(-1, 8), 0, 0], G2D0, part)


def test_weight_strings_are_exact():
    assert w.barycenter(G2D0, w.ZeroPartition(1, 0, 3)).as_strings() == ["1/4", "-1/12", "-1/12", "-1/12"]


def test_bundled_psi_data():
    surface, part, psi = w.load_psi("psi_zero")
    assert part.total == surface.n_zeros
    assert np.all(psi(np.zeros(part.d_r)) == 0)
    with pytest.raises(ConfigurationError):
        w.load_psi("does_not_exist")


def test_c_interpolant_rejects_extrapolation():
    c = _c_interp()
    assert c(0.0) == pytest.approx(4.0)
    with pytest.raises(DomainError):
        c(0.3)
    with pytest.raises(ConfigurationError):
        w.CInterpolant([0.0], [4.0])


def test_zero_psi_gives_barycenter():
    part = w.ZeroPartition(0, 0, 4)
    rows = w.weight_drift_table([1e2, 1e4], G2D0, part, w.PsiAffine.zero(4), _c_interp())
    assert [r[1] for r in rows] == [0.0, 0.0]


def test_bounded_psi_drift_scales_like_inverse_log():
    part = w.ZeroPartition(0, 0, 4)
    psi = w.PsiAffine(np.array([0.3, -0.1, 0.2, -0.4]), np.zeros((4, 4)))
    rows = w.weight_drift_table([1e2, 1e4, 1e8], G2D0, part, psi, _c_interp(0.5))
    prod = np.array([r[2] for r in rows])
    assert np.ptp(prod) <= 0.2 * np.mean(prod)
    # Doubling log t roughly halves the drift.
    assert rows[1][1] / rows[2][1] == pytest.approx(2.0, rel=0.15)


def test_fixed_point_is_admissible_and_exact():
    part = w.ZeroPartition(1, 0, 3)
    psi = w.PsiAffine(np.array([0.2, 0.0, -0.2]), 0.05 * np.eye(3))
    res = w.solve_t_compatible(1e3, G2D0, part, psi, _c_interp(0.3))
    assert w.is_admissible(res.weights, G2D0, part)
    lam_c = float(Fraction(-1, 12))
    assert np.max(np.abs(w.fixed_point_map(res.mu, 1e3, lam_c, psi, _c_interp(0.3)) - res.mu)) <= 1e-10


def test_t_compatible_rejects_small_t():
    with pytest.raises(DomainError):
        w.solve_t_compatible(1.5, G2D0, w.ZeroPartition(0, 0, 4), w.PsiAffine.zero(4), _c_interp())
