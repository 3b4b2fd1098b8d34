"""The distinguished Painlevé III transcendent.

The function psi is the positive, decreasing solution of

    (x d/dx)^2 psi = (x^2 / 2) sinh(2 psi),   x > 0,

with ``psi ~ -(1/3) log x`` as x -> 0 and exponential decay as x -> infinity.
In the variable ``s = log x`` the equation reads ``psi_ss = (x^2/2) sinh(2 psi)``
and is solved as a two-point boundary value problem by second-order central
differences on a uniform s-grid with a damped Newton iteration.

Boundary conditions
-------------------
Small x: ``x psi'(x) = -1/3 + (3/16) x^2 exp(2 psi)``, the leading term plus its
first correction obtained by integrating the equation once with the leading
behavior inserted.

Large x: the linearization ``psi_ss = x^2 psi`` has the decaying solution
``K0(x)``, so ``x psi' / psi = -x K1(x) / K0(x)`` (Robin condition).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicHermiteSpline
from scipy.special import k0e, k1e

from .errors import DomainError, SolverError

__all__ = [
    "PainleveSolution",
    "solve_painleve",
    "eval_psi",
    "eta",
    "psi_P",
    "branch",
    "fit_tail_decay",
    "ode_residual",
    "default_solution",
]


@dataclass(frozen=True, eq=False)
class PainleveSolution:
    """Grid samples of psi and its derivative.

    Attributes
    ----------
    grid : ndarray
        Strictly increasing positive abscissae x_0..x_N (log-spaced).
    psi, dpsi : ndarray
        psi and d psi / dx at the nodes.
    residual_max : float
        Maximum modulus of the discrete equation ``psi_ss - (x^2/2) sinh 2psi``.
    iterations : int
        Newton iterations used.
    trace : list of float
        Residual history of the Newton iteration.
    """

    grid: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    residual_max: float
    iterations: int = 0
    trace: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("grid", "psi", "dpsi"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        s = np.log(self.grid)
        # Spline of psi in s with exact slope x psi', and of x psi' with slope from the ODE.
        dpsi_s = self.grid * self.dpsi
        ddpsi_s = 0.5 * self.grid**2 * np.sinh(2.0 * self.psi)
        object.__setattr__(self, "_spline_psi", CubicHermiteSpline(s, self.psi, dpsi_s))
        object.__setattr__(self, "_spline_dpsi_s", CubicHermiteSpline(s, dpsi_s, ddpsi_s))
        object.__setattr__(self, "_series_const", _match_series_constant(self.grid[0], self.psi[0]))

    @property
    def x_min(self):
        return float(self.grid[0])

    @property
    def x_max(self):
        return float(self.grid[-1])

    @property
    def eta_values(self):
        return (1.0 + 3.0 * self.grid * self.dpsi) / 8.0


def _robin_coefficient(x):
    """``x K1(x) / K0(x)`` evaluated with exponentially scaled Bessel functions."""
    return x * k1e(x) / k0e(x)


def _small_x_slope(x, psi):
    """Small-x boundary value of ``x psi'`` including the first correction."""
    return -1.0 / 3.0 + (3.0 / 16.0) * x * x * np.exp(2.0 * psi)


def _match_series_constant(x0, psi0):
    """Constant C0 with ``psi0 = -(1/3) log x0 + C0 + (9/64) x0^(4/3) exp(2 C0)``."""
    c0 = psi0 + np.log(x0) / 3.0
    for _ in range(60):
        new = psi0 + np.log(x0) / 3.0 - (9.0 / 64.0) * x0 ** (4.0 / 3.0) * np.exp(2.0 * c0)
        if abs(new - c0) < 1e-16:
            break
        c0 = new
    return float(c0)


def _residual(psi, x, h):
    """Discrete equations: boundary rows and interior second differences."""
    f = np.empty_like(psi)
    f[1:-1] = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / h**2 - 0.5 * x[1:-1] ** 2 * np.sinh(2.0 * psi[1:-1])
    f[0] = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h) - _small_x_slope(x[0], psi[0])
    f[-1] = (3.0 * psi[-1] - 4.0 * psi[-2] + psi[-3]) / (2.0 * h) + _robin_coefficient(x[-1]) * psi[-1]
    return f


def _jacobian(psi, x, h):
    n = psi.size
    main = np.empty(n)
    main[1:-1] = -2.0 / h**2 - x[1:-1] ** 2 * np.cosh(2.0 * psi[1:-1])
    rows = [np.arange(1, n - 1)] * 3
    cols = [np.arange(0, n - 2), np.arange(1, n - 1), np.arange(2, n)]
    vals = [np.full(n - 2, 1.0 / h**2), main[1:-1], np.full(n - 2, 1.0 / h**2)]
    d_small = (3.0 / 8.0) * x[0] ** 2 * np.exp(2.0 * psi[0])
    rows += [np.zeros(3, dtype=int), np.full(3, n - 1)]
    cols += [np.array([0, 1, 2]), np.array([n - 1, n - 2, n - 3])]
    vals += [
        np.array([-3.0 / (2.0 * h) - d_small, 4.0 / (2.0 * h), -1.0 / (2.0 * h)]),
        np.array([3.0 / (2.0 * h) + _robin_coefficient(x[-1]), -4.0 / (2.0 * h), 1.0 / (2.0 * h)]),
    ]
    return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def _newton(psi, x, h, tol, max_iter):
    trace = []
    # Rounding floor of the second difference; tolerances below it are unattainable.
    floor = 64.0 * np.finfo(float).eps * max(1.0, np.max(np.abs(psi))) / h**2
    f = _residual(psi, x, h)
    norm = np.max(np.abs(f))
    trace.append(float(norm))
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return psi, norm, it - 1, trace
        step = spla.spsolve(_jacobian(psi, x, h), -f)
        damping = 1.0
        while damping > 1e-6:
            trial = psi + damping * step
            if np.all(trial > 0):
                f_trial = _residual(trial, x, h)
                norm_trial = np.max(np.abs(f_trial))
                if np.isfinite(norm_trial) and norm_trial < norm:
                    break
            damping *= 0.5
        else:
            if norm <= floor:
                return psi, norm, it - 1, trace
            raise SolverError("Painlevé Newton iteration stalled", trace=trace)
        psi, f, norm = trial, f_trial, norm_trial
        trace.append(float(norm))
    if norm <= max(tol, floor):
        return psi, norm, max_iter, trace
    raise SolverError("Painlevé Newton iteration did not converge", trace=trace)


def _initial_guess(x):
    # K0(x)/3 has the leading small-x behavior and the large-x decay.
    return k0e(x) * np.exp(-x) / 3.0 + 1e-300


def solve_painleve(x_min=1e-3, x_max=25.0, n_nodes=2048, tol=1e-10, max_iter=60):
    """Solve the Painlevé III boundary value problem.

    Parameters
    ----------
    x_min, x_max : float
        Interval end points with ``0 < x_min < 1 < x_max``.
    n_nodes : int
        Number of log-spaced nodes, at least 64.
    tol : float
        Target for the maximum discrete residual.  Values below the
        rounding floor of the second difference are clipped to that floor.
    max_iter : int
        Newton iteration cap per continuation stage.

    Returns
    -------
    PainleveSolution

    Raises
    ------
    DomainError
        On invalid parameters.
    SolverError
        When Newton fails or positivity of psi is lost.
    """
    if not (0.0 < x_min < 1.0 < x_max):
        raise DomainError("need 0 < x_min < 1 < x_max")
    if int(n_nodes) < 64:
        raise DomainError("n_nodes must be at least 64")
    if tol <= 0:
        raise DomainError("tol must be positive")
    n = int(n_nodes)
    s = np.linspace(np.log(x_min), np.log(x_max), n)
    h = s[1] - s[0]
    x = np.exp(s)
    psi0 = _initial_guess(x)
    try:
        psi, norm, iters, trace = _newton(psi0, x, h, tol, max_iter)
    except SolverError:
        psi, norm, iters, trace = _continuation(x_min, x_max, n, tol, max_iter)
    if np.any(psi <= 0):
        raise SolverError("psi lost positivity", trace=trace)
    dpsi_s = np.empty_like(psi)
    dpsi_s[1:-1] = (psi[2:] - psi[:-2]) / (2.0 * h)
    dpsi_s[0] = _small_x_slope(x[0], psi[0])
    dpsi_s[-1] = -_robin_coefficient(x[-1]) * psi[-1]
    residual = _residual(psi, x, h)
    return PainleveSolution(
        grid=x,
        psi=psi,
        dpsi=dpsi_s / x,
        residual_max=float(np.max(np.abs(residual[1:-1]))),
        iterations=iters,
        trace=trace,
    )


def _continuation(x_min, x_max, n, tol, max_iter):
    """Newton continuation in the right end point, starting from x_max = 4."""
    stages = np.geomspace(min(4.0, x_max), x_max, 6)
    psi_prev, s_prev = None, None
    total = 0
    trace = []
    for xm in stages:
        s = np.linspace(np.log(x_min), np.log(xm), n)
        x = np.exp(s)
        if psi_prev is None:
            guess = _initial_guess(x)
        else:
            guess = np.interp(s, s_prev, psi_prev)
            tail = s > s_prev[-1]
            guess[tail] = psi_prev[-1] * k0e(x[tail]) / k0e(np.exp(s_prev[-1])) * np.exp(np.exp(s_prev[-1]) - x[tail])
        psi_prev, _, iters, tr = _newton(guess, x, s[1] - s[0], tol, max_iter)
        s_prev = s
        total += iters
        trace.extend(tr)
    return psi_prev, trace[-1], total, trace


def _series(sol, x):
    c0 = sol._series_const
    corr = (9.0 / 64.0) * x ** (4.0 / 3.0) * np.exp(2.0 * c0)
    psi = -np.log(x) / 3.0 + c0 + corr
    dpsi_s = -1.0 / 3.0 + (4.0 / 3.0) * corr
    return psi, dpsi_s


def _tail(sol, x):
    xm = sol.x_max
    amp = sol.psi[-1] / k0e(xm)
    decay = np.exp(-(x - xm))
    return amp * k0e(x) * decay, -amp * x * k1e(x) * decay


def branch(sol, x):
    """Which representation ``eval_psi`` uses at x: 'series', 'grid' or 'tail'."""
    if x < sol.x_min:
        return "series"
    if x > sol.x_max:
        return "tail"
    return "grid"


def eval_psi(sol, x):
    """Evaluate psi and d psi / dx at positive x.

    Inside the grid a cubic Hermite spline in ``log x`` is used for psi (slope
    ``x psi'``) and for ``x psi'`` (slope from the equation), so both are C^1
    and reproduce node values exactly.  Below the grid the two-term small-x
    expansion matched at ``x_min`` is used; above it the decaying Bessel
    shape ``C K0(x)`` matched at ``x_max``.

    Parameters
    ----------
    sol : PainleveSolution
    x : float or array_like
        Positive abscissae.

    Returns
    -------
    psi, dpsi : float or ndarray
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("psi is evaluated at positive x only")
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    psi = np.empty_like(xa)
    dpsi_s = np.empty_like(xa)
    lo = xa < sol.x_min
    hi = xa > sol.x_max
    mid = ~(lo | hi)
    if np.any(mid):
        s = np.log(xa[mid])
        psi[mid] = sol._spline_psi(s)
        dpsi_s[mid] = sol._spline_dpsi_s(s)
        # Exact node values where x hits the grid.
        idx = np.searchsorted(sol.grid, xa[mid])
        idx = np.clip(idx, 0, sol.grid.size - 1)
        exact = sol.grid[idx] == xa[mid]
        if np.any(exact):
            sub = np.flatnonzero(mid)[exact]
            psi[sub] = sol.psi[idx[exact]]
            dpsi_s[sub] = sol.grid[idx[exact]] * sol.dpsi[idx[exact]]
    if np.any(lo):
        psi[lo], dpsi_s[lo] = _series(sol, xa[lo])
    if np.any(hi):
        psi[hi], dpsi_s[hi] = _tail(sol, xa[hi])
    dpsi = dpsi_s / xa
    if scalar:
        return float(psi[0]), float(dpsi[0])
    return psi, dpsi


def eta(sol, x):
    """``(1 + 3 x psi'(x)) / 8``, with value 0 at x = 0."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("eta is defined for x >= 0")
    out = np.zeros_like(xa, dtype=float)
    pos = xa > 0
    if np.any(pos):
        _, dpsi = eval_psi(sol, xa[pos])
        out[pos] = (1.0 + 3.0 * xa[pos] * dpsi) / 8.0
    return float(out) if out.ndim == 0 else out


def psi_P(sol, t, rho):
    """``psi((8/3) t rho^(3/2))``, returning +inf at rho = 0."""
    if t <= 0:
        raise DomainError("t must be positive")
    rho_a = np.asarray(rho, dtype=float)
    if np.any(rho_a < 0):
        raise DomainError("rho must be nonnegative")
    out = np.full(rho_a.shape, np.inf)
    pos = rho_a > 0
    if np.any(pos):
        out[pos] = eval_psi(sol, (8.0 / 3.0) * t * rho_a[pos] ** 1.5)[0]
    return float(out) if out.ndim == 0 else out


def ode_residual(sol, x):
    """Residual of the equation at arbitrary x, using the spline derivatives.

    Second derivatives in s are taken by centered differences of the C^1
    interpolant of ``x psi'``; this is an independent check of the stored data.
    """
    xa = np.asarray(x, dtype=float)
    s = np.log(xa)
    h = 1e-4
    _, d_plus = eval_psi(sol, np.exp(s + h))
    _, d_minus = eval_psi(sol, np.exp(s - h))
    psi, _ = eval_psi(sol, xa)
    psi_ss = (np.exp(s + h) * d_plus - np.exp(s - h) * d_minus) / (2.0 * h)
    return psi_ss - 0.5 * xa**2 * np.sinh(2.0 * psi)


def fit_tail_decay(sol, x_lo=5.0, x_hi=20.0):
    """Least-squares slope and R^2 of ``log psi`` against x on ``[x_lo, x_hi]``."""
    mask = (sol.grid >= x_lo) & (sol.grid <= x_hi)
    if mask.sum() < 3:
        raise DomainError("fit window contains fewer than three nodes")
    from .fitting import linear_fit

    return linear_fit(sol.grid[mask], np.log(sol.psi[mask]))


_DEFAULT = {}


def default_solution():
    """Solution with default parameters, cached per process."""
    if "sol" not in _DEFAULT:
        _DEFAULT["sol"] = solve_painleve()
    return _DEFAULT["sol"]
