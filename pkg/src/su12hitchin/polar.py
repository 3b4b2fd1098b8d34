"""Finite differences on log-polar grids and the local Hitchin operator.

Points are ``zeta = exp(s + i theta)``.  With ``rho = |zeta|``,

    d/dzeta    = exp(-i theta) / (2 rho) (d_s - i d_theta),
    d/dzetabar = exp(+i theta) / (2 rho) (d_s + i d_theta),

so the curvature term of the local Hitchin form is

    dbar(H^-1 d H) = H^-1 [H_ss + H_tt - (H_s + i H_t) H^-1 (H_s - i H_t)] / (4 rho^2).
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .hermlin import det2_field, inv2_field

__all__ = [
    "fd_weights",
    "diff_matrix",
    "periodic_derivative",
    "HiggsForms",
    "hitchin_operator",
    "curvature_term",
    "polar_derivatives",
]


def fd_weights(offsets, deriv):
    """Finite-difference weights for the ``deriv``-th derivative on integer offsets.

    Solves the Vandermonde moment conditions, so the stencil is exact on
    polynomials of degree ``len(offsets) - 1``.
    """
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    if deriv >= n:
        raise DomainError("stencil too short for the requested derivative")
    vander = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = factorial(deriv)
    return np.linalg.solve(vander, rhs)


def diff_matrix(n, h, deriv, accuracy=2):
    """Sparse derivative matrix on ``n`` uniform nodes with spacing ``h``.

    Interior rows are centered; rows near the ends use one-sided stencils of
    the same formal order.

    Parameters
    ----------
    n : int
    h : float
    deriv : {1, 2}
    accuracy : {2, 4, 6, 8}
    """
    if deriv not in (1, 2) or accuracy not in (2, 4, 6, 8):
        raise DomainError("supported: first/second derivatives, accuracy 2, 4, 6 or 8")
    half = accuracy // 2
    width = accuracy + deriv if deriv == 2 else accuracy + 1
    if n < width:
        raise DomainError("too few nodes for the stencil")
    rows, cols, vals = [], [], []
    center = np.arange(-half, half + 1)
    w_center = fd_weights(center, deriv)
    for i in range(n):
        if half <= i < n - half:
            offs, w = center, w_center
        elif i < half:
            offs = np.arange(-i, width - i)
            w = fd_weights(offs, deriv)
        else:
            offs = np.arange(n - 1 - i - width + 1, n - i)
            w = fd_weights(offs, deriv)
        rows.extend([i] * len(offs))
        cols.extend(i + offs)
        vals.extend(w / h**deriv)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def periodic_derivative(f, h, deriv, axis, accuracy=2):
    """Centered periodic finite difference along ``axis``."""
    half = accuracy // 2
    w = fd_weights(np.arange(-half, half + 1), deriv)
    out = np.zeros_like(f)
    for k, wk in zip(range(-half, half + 1), w):
        if wk != 0:
            out = out + wk * np.roll(f, -k, axis=axis)
    return out / h**deriv


@dataclass(frozen=True)
class HiggsForms:
    """Local Laurent-polynomial forms of the Higgs components.

    ``beta`` is a row vector and ``gamma`` a column vector, each stored as
    coefficient arrays of shape ``(k, 2)`` for powers ``low, ..., low + k - 1``
    of zeta.
    """

    beta: np.ndarray
    gamma: np.ndarray
    low: int = 0

    def __post_init__(self):
        for name in ("beta", "gamma"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=complex))
            if arr.shape[1] != 2:
                raise DomainError("coefficient arrays must have shape (k, 2)")
            object.__setattr__(self, name, arr)

    def _eval(self, coeffs, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros(zeta.shape + (2,), dtype=complex)
        for k, c in enumerate(coeffs):
            out += zeta[..., None] ** (self.low + k) * c
        return out

    def beta_at(self, zeta):
        return self._eval(self.beta, zeta)

    def gamma_at(self, zeta):
        return self._eval(self.gamma, zeta)

    def q_at(self, zeta):
        """Coefficient of the quadratic differential ``beta gamma``."""
        return np.sum(self.beta_at(zeta) * self.gamma_at(zeta), axis=-1)


def _outer(u, v):
    return u[..., :, None] * np.conj(v)[..., None, :]


def curvature_term(h, h_s, h_ss, h_t, h_tt, rho):
    """``dbar(H^-1 dH)`` from polar derivatives of H."""
    hinv = inv2_field(h)
    p = h_s + 1j * h_t
    q = h_s - 1j * h_t
    inner = h_ss + h_tt - p @ hinv @ q
    return hinv @ inner / (4.0 * rho[..., None, None] ** 2)


def hitchin_operator(h, h_s, h_ss, h_t, h_tt, zeta, forms, t):
    """Local Hitchin operator on sampled data.

    ``dbar(H^-1 dH) - t^2 gamma gamma* H det H + t^2 (det H)^-1 H^-1 beta* beta``.

    Parameters
    ----------
    h, h_s, h_ss, h_t, h_tt : ndarray, shape (..., 2, 2)
        Metric and its first and second derivatives in ``s = log rho`` and ``theta``.
    zeta : ndarray
        Sample points, broadcast with the leading shape of ``h``.
    forms : HiggsForms
    t : float
    """
    zeta = np.asarray(zeta, dtype=complex)
    rho = np.abs(zeta)
    curv = curvature_term(h, h_s, h_ss, h_t, h_tt, rho)
    det = det2_field(h).real[..., None, None]
    b = forms.beta_at(zeta)
    g = forms.gamma_at(zeta)
    gg = _outer(g, g)
    bb = np.conj(b)[..., :, None] * b[..., None, :]
    return curv - t**2 * (gg @ h) * det + t**2 * (inv2_field(h) @ bb) / det


def polar_derivatives(h, hs, ht, accuracy=2):
    """Derivatives of a field sampled on a (radial, angular) grid.

    ``h`` has shape ``(n_r, n_a, 2, 2)`` on uniform ``s`` spacing ``hs`` and
    periodic angular spacing ``ht``.  Radial end rows use one-sided stencils.
    """
    n_r = h.shape[0]
    d1 = diff_matrix(n_r, hs, 1, accuracy)
    d2 = diff_matrix(n_r, hs, 2, accuracy)
    flat = h.reshape(n_r, -1)
    h_s = (d1 @ flat).reshape(h.shape)
    h_ss = (d2 @ flat).reshape(h.shape)
    h_t = periodic_derivative(h, ht, 1, axis=1, accuracy=accuracy)
    h_tt = periodic_derivative(h, ht, 2, axis=1, accuracy=accuracy)
    return h_s, h_ss, h_t, h_tt
