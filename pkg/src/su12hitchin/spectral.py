"""First Neumann eigenvalue of ``-Laplace + G_t`` on the unit disk.

The potential is the shrinking well ``G_t = A t^2`` on ``|zeta| < delta / t``
and zero elsewhere.  The first eigenfunction is radial, and matching
``I_0`` inside the well against ``J_0, Y_0`` outside together with the
Neumann condition at ``rho = 1`` gives a 3 x 3 secular determinant whose
smallest positive zero is ``lambda_1(t)``.  A radial finite-element
discretization solved by shift-invert iteration serves as an independent
check.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import special
from scipy.optimize import brentq

from .errors import DomainError, SolverError
from .fitting import linear_fit

__all__ = [
    "WellSpec",
    "bessel_eval",
    "secular_delta",
    "lambda1_of_t",
    "fd_neumann_oracle",
    "eigen_table",
    "bound_products",
]

_BESSEL = {
    "J0": special.j0,
    "J1": special.j1,
    "Y0": special.y0,
    "Y1": special.y1,
    "I0": special.i0,
    "I1": special.i1,
    "I0E": special.i0e,
    "I1E": special.i1e,
}


@dataclass(frozen=True)
class WellSpec:
    """Well of height ``A t^2`` and radius ``delta / t`` in the unit disk."""

    t: float
    A: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        if not self.A > 0:
            raise DomainError("A must be positive")
        if not 0 < self.delta <= 1:
            raise DomainError("delta must lie in (0, 1]")
        if not self.t > 1 or not self.t / self.delta > 1:
            raise DomainError("need t > 1 and t / delta > 1")

    @property
    def radius(self):
        return self.delta / self.t

    @property
    def height(self):
        return self.A * self.t**2


def bessel_eval(kind, x):
    """Cylinder functions ``J0, J1, Y0, Y1, I0, I1`` and scaled ``I0E, I1E``.

    Parameters
    ----------
    kind : str
    x : float or array_like
    """
    try:
        fn = _BESSEL[kind.upper()]
    except KeyError as exc:
        raise DomainError(f"unknown Bessel kind {kind!r}") from exc
    x = np.asarray(x, dtype=float)
    if kind.upper().startswith("Y") and np.any(x <= 0):
        raise DomainError("Y functions need x > 0")
    if np.any(x < 0):
        raise DomainError("x must be nonnegative")
    out = fn(x)
    return float(out) if out.ndim == 0 else out


def secular_delta(spec, lam):
    """Secular determinant whose zeros are the radial Neumann eigenvalues.

    Columns are the coefficients of ``I_0`` inside the well and ``J_0, Y_0``
    outside; rows are the Neumann condition at 1 and value and slope
    continuity at the well edge.  The modified Bessel column is scaled by
    ``exp(-x)``, a positive factor that does not move the zeros.
    """
    if not 0 < lam < spec.height:
        raise DomainError("need 0 < lambda < A t^2")
    w = spec.radius
    kappa = math.sqrt(spec.height - lam)
    k = math.sqrt(lam)
    x_in = kappa * w
    x_out = k * w
    mat = np.array(
        [
            [0.0, special.j1(k), special.y1(k)],
            [-special.i0e(x_in), special.j0(x_out), special.y0(x_out)],
            [kappa * special.i1e(x_in), k * special.j1(x_out), k * special.y1(x_out)],
        ]
    )
    return float(np.linalg.det(mat))


def lambda1_of_t(spec, lam_lo=1e-8, growth=1.25, xtol=1e-14, rtol=1e-13):
    """Smallest positive zero of :func:`secular_delta`.

    The bracket is grown geometrically from ``lam_lo`` up to
    ``min(A t^2, 10)`` and the root refined with Brent's method.
    """
    upper = min(spec.height, 10.0)
    lo = lam_lo
    f_lo = secular_delta(spec, lo)
    while True:
        hi = min(lo * growth, upper * (1 - 1e-12))
        if hi <= lo:
            break
        f_hi = secular_delta(spec, hi)
        if f_lo == 0.0:
            return lo
        if np.sign(f_hi) != np.sign(f_lo):
            return brentq(lambda v: secular_delta(spec, v), lo, hi, xtol=xtol * lo, rtol=rtol)
        lo, f_lo = hi, f_hi
    raise SolverError("no sign change of the secular determinant below min(A t^2, 10)", detail={"t": spec.t})


def _radial_mesh(spec, n_radial):
    """Nodes on [0, 1] with one node at the well edge.

    Uniform inside the well, geometric outside so the spacing is continuous
    in scale across the edge.
    """
    w = spec.radius
    n_in = max(n_radial // 4, 8)
    n_out = n_radial - n_in
    inner = np.linspace(0.0, w, n_in + 1)
    outer = w * np.exp(np.linspace(0.0, -math.log(w), n_out + 1))
    outer[-1] = 1.0
    return np.concatenate([inner, outer[1:]])


def _assemble(nodes, height, well):
    """Linear-element stiffness, mass and potential matrices with weight rho."""
    r0, r1 = nodes[:-1], nodes[1:]
    h = r1 - r0
    # Exact integrals of rho * phi_i * phi_j and rho * phi_i' * phi_j' on each element.
    k_el = 0.5 * (r0 + r1) / h
    m00 = h * (3 * r0 + r1) / 12.0
    m11 = h * (r0 + 3 * r1) / 12.0
    m01 = h * (r0 + r1) / 12.0
    n = nodes.size
    idx = np.arange(n - 1)
    rows = np.concatenate([idx, idx + 1, idx, idx + 1])
    cols = np.concatenate([idx, idx + 1, idx + 1, idx])
    stiff = sp.csr_matrix((np.concatenate([k_el, k_el, -k_el, -k_el]), (rows, cols)), shape=(n, n))
    mass_vals = np.concatenate([m00, m11, m01, m01])
    mass = sp.csr_matrix((mass_vals, (rows, cols)), shape=(n, n))
    in_well = (r1 <= well * (1 + 1e-12)).astype(float)
    pot = sp.csr_matrix((height * mass_vals * np.tile(in_well, 4), (rows, cols)), shape=(n, n))
    return stiff, mass, pot


def fd_neumann_oracle(spec, n_radial=512, potential=True):
    """Lowest eigenvalue of the radial Neumann problem by discretization.

    Linear elements on a graded mesh (a three-point finite-difference scheme
    with exact weights) and shift-invert iteration at zero.

    Parameters
    ----------
    spec : WellSpec
    n_radial : int
        Number of elements, at least 256.
    potential : bool
        Set False to drop the well (the eigenvalue is then 0).
    """
    if n_radial < 256:
        raise DomainError("n_radial must be at least 256")
    nodes = _radial_mesh(spec, int(n_radial))
    stiff, mass, pot = _assemble(nodes, spec.height, spec.radius)
    if not potential:
        # The constant lies in the kernel of the stiffness matrix.
        ones = np.ones(nodes.size)
        return float(ones @ (stiff @ ones)) / float(ones @ (mass @ ones))
    vals = spla.eigsh((stiff + pot).tocsc(), k=1, M=mass.tocsc(), sigma=0.0, which="LM", return_eigenvectors=False)
    return float(vals[0])


def eigen_table(t_list, A=1.0, delta=1.0, n_radial=1024, oracle=True):
    """Rows ``(t, lambda1_secular, lambda1_fd, lambda1 * log t)``."""
    rows = []
    for t in t_list:
        spec = WellSpec(float(t), A, delta)
        lam = lambda1_of_t(spec)
        fd = fd_neumann_oracle(spec, n_radial) if oracle else float("nan")
        rows.append((float(t), lam, fd, lam * math.log(t)))
    return rows


@dataclass(frozen=True)
class BoundProducts:
    """``lambda_1 log t`` and ``lambda_1 (log log(t / 2 delta))^2`` over t."""

    t: np.ndarray
    lambda1: np.ndarray
    lower_product: np.ndarray
    upper_product: np.ndarray
    inverse_fit_slope: float
    inverse_fit_r2: float


def bound_products(t_list, A=1.0, delta=1.0):
    """Products bounding ``lambda_1`` from both sides, with a fit of ``1/lambda_1`` vs ``log t``."""
    t = np.asarray(t_list, dtype=float)
    lam = np.array([lambda1_of_t(WellSpec(v, A, delta)) for v in t])
    if np.any(t / (2 * delta) <= math.e):
        raise DomainError("log log(t / 2 delta) needs t > 2 e delta")
    lower = lam * np.log(t)
    upper = lam * np.log(np.log(t / (2 * delta))) ** 2
    fit = linear_fit(np.log(t), 1.0 / lam)
    return BoundProducts(t, lam, lower, upper, fit.slope, fit.r2)
