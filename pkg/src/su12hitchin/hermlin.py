"""Fixed-size Hermitian linear algebra.

Small positive-definite Hermitian matrices carry every local form of a metric
in this package.  This module provides the weighted norm
``|A|_H = sqrt(tr(A H^-1 A* H))``, closed-form 2x2 square roots and
eigenvalues, and the elementary matrix inequalities used in the gluing and
linearization estimates, phrased as measurable ratios.

Batched variants (suffix ``_field``) act on arrays of shape ``(..., 2, 2)``
and are used by the field-level modules.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "HermMatrix2",
    "HermMatrix3",
    "hnorm",
    "psd_sqrt",
    "eig2",
    "matabs",
    "is_posdef",
    "block_form",
    "pauli_matrices",
    "det2_field",
    "inv2_field",
    "sqrt2_field",
    "invsqrt2_field",
    "hermitize",
    "matrest_ratios",
    "boundsqrt_ratio",
    "offdiag_sqrt_defect",
    "hermcomp0_ratio",
]

_EPS = np.finfo(float).eps


def _as_matrix(a, n=None):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if n is not None and a.shape[0] != n:
        raise DomainError(f"expected a {n}x{n} matrix, got shape {a.shape}")
    return a


def matabs(a):
    """Maximum entry modulus, the matrix absolute value used throughout."""
    return float(np.max(np.abs(np.asarray(a))))


def is_posdef(a):
    """True when a Hermitian matrix is positive definite.

    For 2x2 input the test is ``a11 > 0 and det > 0`` with the determinant
    required to exceed machine precision relative to the entries.  Larger
    matrices use a Cholesky attempt.
    """
    a = _as_matrix(a)
    if not np.allclose(a, a.conj().T, rtol=1e-12, atol=1e-14 * max(matabs(a), 1e-300)):
        return False
    if a.shape[0] == 2:
        scale = matabs(a) ** 2
        det = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]).real
        return bool(a[0, 0].real > 0 and det > _EPS * scale)
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass(frozen=True)
class HermMatrix2:
    """A 2x2 Hermitian matrix with real diagonal and conjugate off-diagonal.

    Parameters
    ----------
    a11, a22 : float
        Diagonal entries.
    a12 : complex
        Upper off-diagonal entry; the lower one is its conjugate.
    """

    a11: float
    a22: float
    a12: complex = 0.0

    @classmethod
    def from_array(cls, a):
        """Build from a 2x2 array, rejecting non-Hermitian input."""
        a = _as_matrix(a, 2)
        scale = max(matabs(a), 1e-300)
        if abs(a[0, 0].imag) > 1e-12 * scale or abs(a[1, 1].imag) > 1e-12 * scale:
            raise DomainError("diagonal of a Hermitian matrix must be real")
        if abs(a[0, 1] - np.conj(a[1, 0])) > 1e-12 * scale:
            raise DomainError("matrix is not Hermitian")
        return cls(float(a[0, 0].real), float(a[1, 1].real), complex(a[0, 1]))

    @property
    def array(self):
        return np.array([[self.a11, self.a12], [np.conj(self.a12), self.a22]], dtype=complex)

    @property
    def det(self):
        return self.a11 * self.a22 - abs(self.a12) ** 2

    @property
    def trace(self):
        return self.a11 + self.a22

    def is_posdef(self):
        scale = max(abs(self.a11), abs(self.a22), abs(self.a12)) ** 2
        return self.a11 > 0 and self.det > _EPS * scale

    def inverse(self):
        d = self.det
        return HermMatrix2(self.a22 / d, self.a11 / d, -self.a12 / d)

    def __array__(self, dtype=None, copy=None):
        arr = self.array
        return arr if dtype is None else arr.astype(dtype)


@dataclass(frozen=True)
class HermMatrix3:
    """A 3x3 Hermitian matrix stored as a full array."""

    entries: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.entries, 3)
        if not np.allclose(a, a.conj().T, rtol=1e-12, atol=1e-14 * max(matabs(a), 1e-300)):
            raise DomainError("matrix is not Hermitian")
        object.__setattr__(self, "entries", a)

    @property
    def array(self):
        return self.entries

    @property
    def det(self):
        return float(np.linalg.det(self.entries).real)

    def is_posdef(self):
        return is_posdef(self.entries)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def block_form(k):
    """Return ``diag(det K^-1, K)`` for a 2x2 positive-definite K."""
    k = _as_matrix(k, 2)
    d = (k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]).real
    if d <= 0:
        raise DomainError("block form needs a positive-definite 2x2 block")
    out = np.zeros((3, 3), dtype=complex)
    out[0, 0] = 1.0 / d
    out[1:, 1:] = k
    return HermMatrix3(out)


def _require_posdef(h):
    h = _as_matrix(np.asarray(h))
    if not is_posdef(h):
        raise DomainError("matrix is not positive definite")
    return h


def hnorm(a, h):
    """H-weighted norm ``sqrt(tr(A H^-1 A* H))``.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Any complex matrix, n = 2 or 3.
    h : array_like or HermMatrix2 or HermMatrix3
        Positive-definite Hermitian weight of the same size.

    Returns
    -------
    float
        Equals the Frobenius norm when ``h`` is the identity.
    """
    h = _require_posdef(h)
    a = _as_matrix(a, h.shape[0])
    val = np.trace(a @ np.linalg.solve(h, a.conj().T) @ h).real
    return float(np.sqrt(max(val, 0.0)))


def psd_sqrt(a):
    """Positive square root of a 2x2 positive-definite Hermitian matrix.

    Uses ``B = (A + sqrt(det A) I) / sqrt(tr A + 2 sqrt(det A))``, which is
    exact for 2x2 matrices and needs no eigen-decomposition.

    Returns
    -------
    HermMatrix2
    """
    m = HermMatrix2.from_array(np.asarray(a)) if not isinstance(a, HermMatrix2) else a
    if not m.is_posdef():
        raise DomainError("square root needs a positive-definite matrix")
    s = np.sqrt(m.det)
    tau = np.sqrt(m.trace + 2.0 * s)
    return HermMatrix2((m.a11 + s) / tau, (m.a22 + s) / tau, m.a12 / tau)


def eig2(h):
    """Sorted eigenvalues ``(alpha1, alpha2)`` of a 2x2 positive-definite matrix."""
    m = HermMatrix2.from_array(np.asarray(h)) if not isinstance(h, HermMatrix2) else h
    if not m.is_posdef():
        raise DomainError("eigenvalue ratio needs a positive-definite matrix")
    half_tr = 0.5 * m.trace
    disc = np.hypot(0.5 * (m.a11 - m.a22), abs(m.a12))
    alpha2 = half_tr + disc
    # Product form keeps the small eigenvalue accurate.
    alpha1 = m.det / alpha2
    return float(alpha1), float(alpha2)


def pauli_matrices():
    """The basis ``sigma0 = diag(2, -1)`` and the three Pauli matrices."""
    return np.array(
        [
            [[2, 0], [0, -1]],
            [[0, 1], [1, 0]],
            [[0, -1j], [1j, 0]],
            [[1, 0], [0, -1]],
        ],
        dtype=complex,
    )


# Batched helpers on arrays of shape (..., 2, 2).


def det2_field(h):
    """Determinant of each 2x2 block."""
    return h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]


def inv2_field(h):
    """Inverse of each 2x2 block by the adjugate formula."""
    d = det2_field(h)
    out = np.empty_like(h)
    out[..., 0, 0] = h[..., 1, 1] / d
    out[..., 1, 1] = h[..., 0, 0] / d
    out[..., 0, 1] = -h[..., 0, 1] / d
    out[..., 1, 0] = -h[..., 1, 0] / d
    return out


def sqrt2_field(h):
    """Positive square root of each Hermitian positive-definite 2x2 block."""
    d = det2_field(h).real
    if np.any(d <= 0) or np.any(h[..., 0, 0].real <= 0):
        raise DomainError("square root of a field needs positive-definite blocks")
    s = np.sqrt(d)
    tau = np.sqrt(h[..., 0, 0].real + h[..., 1, 1].real + 2.0 * s)
    out = h / tau[..., None, None]
    out[..., 0, 0] += s / tau
    out[..., 1, 1] += s / tau
    return out


def invsqrt2_field(h):
    """Inverse positive square root of each positive-definite 2x2 block."""
    return inv2_field(sqrt2_field(h))


def hermitize(h):
    """Symmetrize blocks to exact Hermiticity and return the removed defect."""
    sym = 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))
    defect = float(np.max(np.abs(h - sym))) if h.size else 0.0
    return sym, defect


# Matrix comparison inequalities as measurable ratios.


def matrest_ratios(a, b, m):
    """Ratios whose boundedness expresses the determinant perturbation bounds.

    Parameters
    ----------
    a, b : array_like, shape (2, 2)
        Matrices with ``|A|, |A - B| <= m`` in the max-entry norm.
    m : float
        The common bound.

    Returns
    -------
    tuple of float
        ``|det A - det B| / (m |A - B|)`` and
        ``|det(A) A - det(B) B| / (m^2 |A - B|)``.
    """
    a = _as_matrix(a, 2)
    b = _as_matrix(b, 2)
    diff = matabs(a - b)
    if diff == 0:
        return 0.0, 0.0
    da, db = np.linalg.det(a), np.linalg.det(b)
    r1 = abs(da - db) / (m * diff)
    r2 = matabs(da * a - db * b) / (m * m * diff)
    return float(r1), float(r2)


def boundsqrt_ratio(a, b):
    """``|A^(1/2) - B^(1/2)| / |A - B|`` for positive-definite 2x2 matrices."""
    diff = matabs(np.asarray(a) - np.asarray(b))
    if diff == 0:
        return 0.0
    sa = psd_sqrt(a).array
    sb = psd_sqrt(b).array
    return matabs(sa - sb) / diff


def offdiag_sqrt_defect(a):
    """``|B12 - A12 / tr B|`` with ``B = A^(1/2)``; zero in exact arithmetic."""
    m = HermMatrix2.from_array(np.asarray(a))
    b = psd_sqrt(m)
    return abs(b.a12 - m.a12 / b.trace)


def hermcomp0_ratio(a, h):
    """``|A|_H^2 / |A|_I^2`` together with the eigenvalue ratio bound of H.

    Returns
    -------
    ratio : float
    lower, upper : float
        ``alpha1 / alpha2`` and ``alpha2 / alpha1``; the ratio lies between.
    """
    a = _as_matrix(a, 2)
    alpha1, alpha2 = eig2(h)
    num = hnorm(a, h) ** 2
    den = np.sum(np.abs(a) ** 2)
    return float(num / den), alpha1 / alpha2, alpha2 / alpha1
