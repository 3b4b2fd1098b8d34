"""Rank-two local model metrics at zeros of R type.

The metric has the rotationally symmetric form

    H(rho e^{i theta}) = [[rho f1(u), f3(u) e^{-i theta}],
                          [f3(u) e^{i theta}, f2(u) / rho]],   u = t^(2/3) rho,

and solves ``dbar(H^-1 dH) = t^2 (g g* H det H - (det H)^-1 H^-1 b* b)`` with
``b = (zeta, 1)/sqrt(2)`` and ``g = (1, zeta)^T / sqrt(2)``.  The parameter
lambda enters only through the behavior at infinity, where in the frame
``M = S^-* H S^-1``, ``S = [[zeta, -1], [zeta, 1]] / sqrt(2)``, the metric
approaches ``M_inf = diag(16 c^-2 u^(-1-4 lambda), (c/4) u^(2 lambda - 1))``.

Numerical method
----------------
Radial reduction on a uniform grid in ``s = log rho`` split at ``u = 1``:

* inner part, unknowns ``A = H11``, ``B = H22``, ``F = f3``, with regularity
  ``A_s = B_s = 0`` and ``F_s = F`` at the innermost node;
* outer part, unknowns ``da = log M11 - log M11_inf``, ``db`` likewise and
  ``r = M12``, with the tail equations written so that exponentially small
  deviations keep relative precision; the constant c is an unknown and the
  conditions ``da = db = r = da_s = 0`` are imposed at the last node;
* values and s-derivatives are matched at the shared node.

The discrete system is solved by damped Newton with a column-colored
finite-difference Jacobian and sparse LU.  Continuation in lambda starts from
the closed form at lambda = 0 built from the Painlevé transcendent.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import make_interp_spline
from scipy.linalg import solve_banded

from . import painleve
from .errors import DomainError, SolverError
from .hermlin import HermMatrix2, block_form
from .polar import HiggsForms, diff_matrix, hitchin_operator

__all__ = [
    "R_REGULAR_FORMS",
    "R_SIGMA_FORMS",
    "LocalModelSolution",
    "AsymptoticModel",
    "solve_local_model",
    "eval_M_lambda",
    "eval_H_t_lambda",
    "M_infty_lambda",
    "extract_c_lambda",
    "extrapolate_c",
    "lambda0_oracle",
    "lambda0_M_oracle",
    "pde_residual",
    "c_lambda_table",
    "in_stability_set",
    "scaling_defect",
    "tail_decay_fit",
    "LAMBDA0_ARGUMENT",
]

_SQ2 = math.sqrt(2.0)

# Regular frame: b = (zeta, 1)/sqrt2, g = (1, zeta)^T/sqrt2.
R_REGULAR_FORMS = HiggsForms(
    beta=np.array([[0, 1], [1, 0]]) / _SQ2,
    gamma=np.array([[1, 0], [0, 1]]) / _SQ2,
)
# Singular frame of M: b = (0, 1/zeta), g = (0, zeta^2)^T.
R_SIGMA_FORMS = HiggsForms(
    beta=np.array([[0, 1], [0, 0], [0, 0], [0, 0]]),
    gamma=np.array([[0, 0], [0, 0], [0, 0], [0, 1]]),
    low=-1,
)

# psi_P argument factor k in psi(k t rho^(3/2)) for the lambda = 0 model.
LAMBDA0_ARGUMENT = 4.0 / 3.0

_NPAD = 6  # label gap between the inner and outer blocks in the Jacobian coloring
_NCOLOR = 16


def in_stability_set(c):
    """Membership of ``(c0, c1, c2)`` in the open stability set.

    ``c0 + c1 + c2 = 3``, all ``c_j > 0`` and ``c_i + c_j > 1`` for ``i != j``.
    Exact for rational input.
    """
    c0, c1, c2 = c
    return c0 + c1 + c2 == 3 and min(c) > 0 and min(c0 + c1, c0 + c2, c1 + c2) > 1


@dataclass(frozen=True)
class AsymptoticModel:
    """The decoupled asymptote of the lambda family."""

    lam: float
    c_lambda: float

    def __post_init__(self):
        if not self.c_lambda > 0:
            raise DomainError("c_lambda must be positive")


def M_infty_lambda(model, rho):
    """``diag(rho^-1 mu^2, rho^-1 mu^-1)`` with ``mu = 4 c^-1 rho^(-2 lambda)``."""
    if rho <= 0:
        raise DomainError("rho must be positive")
    mu = 4.0 / model.c_lambda * rho ** (-2.0 * model.lam)
    return HermMatrix2(mu * mu / rho, 1.0 / (mu * rho), 0.0)


def _m_infty_arrays(lam, c, u):
    return 16.0 / c**2 * u ** (-1.0 - 4.0 * lam), 0.25 * c * u ** (2.0 * lam - 1.0)


@dataclass(frozen=True, eq=False)
class LocalModelSolution:
    """Radial profiles of the lambda-family local model.

    Attributes
    ----------
    lam, t : float
    grid : ndarray
        Physical radii rho.
    f1, f2, f3 : ndarray
        Profiles evaluated at ``u = t^(2/3) rho``.
    c_lambda, c_error : float
        Extracted coefficient and its error estimate.
    residual_max : float
        Maximum scaled residual of the discrete system.
    switch : int
        Index of the node shared by the inner and outer parts.
    delta_a, delta_b, r : ndarray
        Outer unknowns at the nodes ``switch..N`` in the t = 1 normalization.
    """

    lam: float
    t: float
    grid: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    c_lambda: float
    residual_max: float
    c_error: float
    switch: int
    delta_a: np.ndarray
    delta_b: np.ndarray
    r: np.ndarray
    iterations: int = 0
    trace: list = field(default_factory=list)
    state: np.ndarray = None

    def __post_init__(self):
        u = self.u
        k = self.switch
        sig = np.log(u)
        a1 = u[: k + 1] * self.f1[: k + 1]
        b1 = self.f2[: k + 1] / u[: k + 1]
        f3 = self.f3[: k + 1]
        splines = {
            "a": make_interp_spline(sig[: k + 1], a1, k=5),
            "b": make_interp_spline(sig[: k + 1], b1, k=5),
            "f": make_interp_spline(sig[: k + 1], f3, k=5),
            "da": make_interp_spline(sig[k:], self.delta_a, k=5),
            "db": make_interp_spline(sig[k:], self.delta_b, k=5),
        }
        if np.all(self.r > 0):
            splines["logr"] = make_interp_spline(sig[k:], np.log(self.r), k=5)
        else:
            splines["r"] = make_interp_spline(sig[k:], self.r, k=5)
        object.__setattr__(self, "_splines", splines)

    @property
    def u(self):
        return self.t ** (2.0 / 3.0) * self.grid

    @property
    def u_switch(self):
        return float(self.u[self.switch])

    @property
    def u_min(self):
        return float(self.u[0])

    @property
    def u_max(self):
        return float(self.u[-1])

    @property
    def asymptotic_model(self):
        return AsymptoticModel(self.lam, self.c_lambda)

    def outer_pqr(self):
        """``(M11, M22, M12)`` at the outer nodes, t = 1 normalization."""
        u = self.u[self.switch :]
        p_inf, q_inf = _m_infty_arrays(self.lam, self.c_lambda, u)
        return p_inf * np.exp(self.delta_a), q_inf * np.exp(self.delta_b), self.r


# ---------------------------------------------------------------------------
# Discrete system


class _RadialSystem:
    """Residual of the split radial boundary value problem."""

    def __init__(self, t, lam, rho, switch, accuracy):
        self.t = float(t)
        self.lam = float(lam)
        self.rho = rho
        self.k = switch
        s = np.log(rho)
        self.h = s[1] - s[0]
        self.n_in = switch + 1
        self.n_out = rho.size - switch
        self.rho_in = rho[: switch + 1]
        self.rho_out = rho[switch:]
        self.d1_in = diff_matrix(self.n_in, self.h, 1, accuracy)
        self.d2_in = diff_matrix(self.n_in, self.h, 2, accuracy)
        self.d1_out = diff_matrix(self.n_out, self.h, 1, accuracy)
        self.d2_out = diff_matrix(self.n_out, self.h, 2, accuracy)
        self.sigma = np.log(self.rho_out) + (2.0 / 3.0) * math.log(self.t)
        self.a_inf_s = -(1.0 + 4.0 * lam)
        self.b_inf_s = 2.0 * lam - 1.0
        self.size = 3 * (self.n_in + self.n_out) + 1
        self._build_coloring()

    # layout ---------------------------------------------------------------
    def unpack(self, x):
        inner = x[: 3 * self.n_in].reshape(self.n_in, 3)
        outer = x[3 * self.n_in : -1].reshape(self.n_out, 3)
        return inner, outer, x[-1]

    def pack(self, inner, outer, logc):
        return np.concatenate([np.asarray(inner).ravel(), np.asarray(outer).ravel(), [logc]])

    def a_inf(self, logc):
        return math.log(16.0) - 2.0 * logc + (2.0 / 3.0) * math.log(self.t) + self.a_inf_s * self.sigma

    def b_inf(self, logc):
        return logc - math.log(4.0) + (2.0 / 3.0) * math.log(self.t) + self.b_inf_s * self.sigma

    # residual -------------------------------------------------------------
    def inner_E(self, a, b, f):
        """``4 rho^2 K Hcal(K)`` at theta = 0 for the inner unknowns."""
        a_s, a_ss = self.d1_in @ a, self.d2_in @ a
        b_s, b_ss = self.d1_in @ b, self.d2_in @ b
        f_s, f_ss = self.d1_in @ f, self.d2_in @ f
        n = a.size
        k = np.empty((n, 2, 2), dtype=complex)
        k[:, 0, 0], k[:, 1, 1], k[:, 0, 1], k[:, 1, 0] = a, b, f, f
        ks = np.empty_like(k)
        ks[:, 0, 0], ks[:, 1, 1], ks[:, 0, 1], ks[:, 1, 0] = a_s, b_s, f_s, f_s
        kss = np.empty_like(k)
        kss[:, 0, 0], kss[:, 1, 1], kss[:, 0, 1], kss[:, 1, 0] = a_ss, b_ss, f_ss, f_ss
        zero = np.zeros(n)
        kt = np.empty_like(k)
        kt[:, 0, 0], kt[:, 1, 1], kt[:, 0, 1], kt[:, 1, 0] = zero, zero, -1j * f, 1j * f
        ktt = np.empty_like(k)
        ktt[:, 0, 0], ktt[:, 1, 1], ktt[:, 0, 1], ktt[:, 1, 0] = zero, zero, -f, -f
        rho = self.rho_in
        hc = hitchin_operator(k, ks, kss, kt, ktt, rho.astype(complex), R_REGULAR_FORMS, self.t)
        return 4.0 * rho[:, None, None] ** 2 * (k @ hc), (a_s, b_s, f_s)

    def outer_eqs(self, da, db, r, logc):
        t2 = self.t**2
        rho = self.rho_out
        a = self.a_inf(logc) + da
        b = self.b_inf(logc) + db
        p, q = np.exp(a), np.exp(b)
        da_s, db_s, r_s = self.d1_out @ da, self.d1_out @ db, self.d1_out @ r
        da_ss, db_ss, r_ss = self.d2_out @ da, self.d2_out @ db, self.d2_out @ r
        a_s = self.a_inf_s + da_s
        b_s = self.b_inf_s + db_s
        kap = r * r / (p * q)
        one_m = 1.0 - kap
        m = p * q * one_m
        eps = da + 2.0 * db
        rho3 = rho**3
        src_a, src_b = self._sources(a_s, b_s, r, r_s, p, q, kap)
        eq_a = da_ss - src_a
        eq_b = db_ss - src_b - 8.0 * t2 * rho3 * np.sinh(eps + np.log1p(-kap))
        eq_r = (
            r_ss
            - (r_s * (a_s + b_s) - r * a_s * b_s) / one_m
            + r * r_s**2 / m
            - 4.0 * t2 * rho3 * np.exp(eps) * one_m * r
        ) / np.sqrt(p * q)
        return (eq_a, eq_b, eq_r), (p, q, a_s, b_s, r_s, kap)

    def _sources(self, a_s, b_s, r, r_s, p, q, kap):
        """Terms of the diagonal outer equations that are quadratic in ``r``."""
        one_m = 1.0 - kap
        m = p * q * one_m
        rho = self.rho_out
        src_a = a_s**2 * kap / one_m - (2.0 * r * a_s * r_s - r_s**2) / m + 4.0 * self.t**2 * rho**6 * q * one_m * r**2
        src_b = b_s**2 * kap / one_m - (2.0 * r * b_s * r_s - r_s**2) / m
        return src_a, src_b

    def clean_tail(self, da, db, r, logc, floor=1e-25):
        """Recompute the far tail of ``da`` and ``db`` from the converged ``r``.

        Once ``da`` drops below ``floor`` the Newton values are dominated by a
        rounding-level massless mode.  There ``da`` is rebuilt by integrating its
        quadratic source twice from the right end, and ``eps = da + 2 db`` by a
        recessive linear solve.  Values above ``floor`` are left unchanged.
        """
        small = np.flatnonzero(np.abs(da) < floor)
        if small.size == 0 or small[0] >= self.n_out - 3:
            return da, db
        j0 = small[0]
        a = self.a_inf(logc) + da
        b = self.b_inf(logc) + db
        p, q = np.exp(a), np.exp(b)
        r_s = self.d1_out @ r
        kap = r * r / (p * q)
        src_a, src_b = self._sources(self.a_inf_s, self.b_inf_s, r, r_s, p, q, kap)
        s = np.log(self.rho_out[j0:])
        rev = slice(None, None, -1)
        first = -cumulative_trapezoid(src_a[j0:][rev], s[rev], initial=0.0)[rev]
        da_new = -cumulative_trapezoid(first[rev], s[rev], initial=0.0)[rev]
        # eps'' - m^2 eps = g with eps fixed at both ends of the window.
        h = self.h
        mass2 = 16.0 * self.t**2 * self.rho_out[j0:] ** 3
        g = src_a[j0:] + 2.0 * src_b[j0:] + 0.5 * mass2 * np.log1p(-kap[j0:])
        n = s.size - 2
        ab = np.zeros((3, n))
        ab[0, 1:] = 1.0 / h**2
        ab[1] = -2.0 / h**2 - mass2[1:-1]
        ab[2, :-1] = 1.0 / h**2
        rhs = g[1:-1].copy()
        rhs[0] -= (da[j0] + 2.0 * db[j0]) / h**2
        eps_new = np.zeros(s.size)
        eps_new[0] = da[j0] + 2.0 * db[j0]
        eps_new[1:-1] = solve_banded((1, 1), ab, rhs)
        da_out, db_out = da.copy(), db.copy()
        da_out[j0 + 1 :] = da_new[1:]
        db_out[j0 + 1 :] = 0.5 * (eps_new[1:] - da_new[1:])
        return da_out, db_out

    def residual(self, x):
        inner, outer, logc = self.unpack(x)
        a, b, f = inner.T
        da, db, r = outer.T
        e, (a_s, b_s, f_s) = self.inner_E(a, b, f)
        res_in = np.empty((self.n_in - 1, 3))
        res_in[0] = (a_s[0], b_s[0], f_s[0] - f[0])
        sab = np.sqrt(a * b)
        res_in[1:, 0] = e[1:-1, 0, 0].real / a[1:-1]
        res_in[1:, 1] = e[1:-1, 1, 1].real / b[1:-1]
        res_in[1:, 2] = e[1:-1, 0, 1].real / sab[1:-1]
        (eq_a, eq_b, eq_r), (p, q, oa_s, ob_s, r_s, _) = self.outer_eqs(da, db, r, logc)
        rk = self.rho_out[0]
        p0, q0, r0 = p[0], q[0], r[0]
        a_out = 0.5 * rk**2 * (p0 + 2.0 * r0 + q0)
        b_out = 0.5 * (p0 - 2.0 * r0 + q0)
        f_out = 0.5 * rk * (q0 - p0)
        pa, qb = p0 * oa_s[0], q0 * ob_s[0]
        a_out_s = rk**2 * (p0 + 2.0 * r0 + q0) + 0.5 * rk**2 * (pa + 2.0 * r_s[0] + qb)
        b_out_s = 0.5 * (pa - 2.0 * r_s[0] + qb)
        f_out_s = 0.5 * rk * (q0 - p0) + 0.5 * rk * (qb - pa)
        ak, bk, fk = a[-1], b[-1], f[-1]
        sk = math.sqrt(ak * bk)
        match = np.array(
            [
                (ak - a_out) / ak,
                (bk - b_out) / bk,
                (fk - f_out) / sk,
                (a_s[-1] - a_out_s) / ak,
                (b_s[-1] - b_out_s) / bk,
                (f_s[-1] - f_out_s) / sk,
            ]
        )
        res_out = np.stack([eq_a[1:-1], eq_b[1:-1], eq_r[1:-1]], axis=1)
        bc = np.array([da[-1], db[-1], r[-1] / math.sqrt(p[-1] * q[-1]), (self.d1_out @ da)[-1]])
        return np.concatenate([res_in.ravel(), match, res_out.ravel(), bc])

    def admissible(self, x):
        inner, outer, logc = self.unpack(x)
        a, b, f = inner.T
        if not (np.all(a > 0) and np.all(b > 0) and np.all(a * b - f * f > 0)):
            return False
        da, db, r = outer.T
        p = np.exp(self.a_inf(logc) + da)
        q = np.exp(self.b_inf(logc) + db)
        return bool(np.all(r * r < p * q) and np.isfinite(logc))

    # Jacobian -------------------------------------------------------------
    def _build_coloring(self):
        n_in, n_out, k = self.n_in, self.n_out, self.k
        # Node labels: inner i -> i, outer j -> k + _NPAD + j.
        col_label = np.concatenate([np.repeat(np.arange(n_in), 3), np.repeat(k + _NPAD + np.arange(n_out), 3)])
        col_comp = np.tile(np.arange(3), n_in + n_out)
        rows_lo, rows_hi = [], []
        w = 5
        rows_lo += [0] * 3
        rows_hi += [w] * 3
        for i in range(1, n_in - 1):
            rows_lo += [max(0, i - w)] * 3
            rows_hi += [min(k, i + w)] * 3
        rows_lo += [k - w + 1] * 6
        rows_hi += [k + _NPAD + w - 1] * 6
        for j in range(1, n_out - 1):
            rows_lo += [k + _NPAD + max(0, j - w)] * 3
            rows_hi += [k + _NPAD + min(n_out - 1, j + w)] * 3
        last = k + _NPAD + n_out - 1
        rows_lo += [last - w] * 4
        rows_hi += [last] * 4
        self.row_lo = np.array(rows_lo)
        self.row_hi = np.array(rows_hi)
        assert np.all(self.row_hi - self.row_lo < _NCOLOR)
        self.col_label = col_label
        self.col_comp = col_comp
        # Map (label, comp) -> column index.
        self.label_to_col = -np.ones((k + _NPAD + n_out, 3), dtype=int)
        self.label_to_col[col_label, col_comp] = np.arange(col_label.size)

    def jacobian(self, x, f0):
        n = x.size
        nvar = n - 1
        steps = 1e-7 * np.maximum(np.abs(x), 1e-6)
        rows_all, cols_all, vals_all = [], [], []
        labels = self.col_label
        for color in range(_NCOLOR):
            for comp in range(3):
                sel = np.flatnonzero((labels % _NCOLOR == color) & (self.col_comp == comp))
                if sel.size == 0:
                    continue
                xp = x.copy()
                xp[sel] += steps[sel]
                df = self.residual(xp) - f0
                rows = np.flatnonzero(df)
                if rows.size == 0:
                    continue
                lo = self.row_lo[rows]
                lab = lo + (color - lo) % _NCOLOR
                ok = lab <= self.row_hi[rows]
                rows, lab = rows[ok], lab[ok]
                ok = lab < self.label_to_col.shape[0]
                rows, lab = rows[ok], lab[ok]
                cols = self.label_to_col[lab, comp]
                ok = cols >= 0
                rows, cols = rows[ok], cols[ok]
                rows_all.append(rows)
                cols_all.append(cols)
                vals_all.append(df[rows] / steps[cols])
        xp = x.copy()
        xp[nvar] += steps[nvar]
        df = (self.residual(xp) - f0) / steps[nvar]
        rows = np.flatnonzero(df)
        rows_all.append(rows)
        cols_all.append(np.full(rows.size, nvar))
        vals_all.append(df[rows])
        return sp.csc_matrix(
            (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))), shape=(n, n)
        )


def _newton(system, x, tol, max_iter, polish=2):
    f = system.residual(x)
    norm = float(np.max(np.abs(f)))
    trace = [norm]
    if not np.isfinite(norm):
        raise SolverError("non-finite residual at the initial guess", trace=trace)
    it = 0
    while norm > tol:
        it += 1
        if it > max_iter:
            raise SolverError("local model Newton iteration did not converge", trace=trace)
        step = _linear_solve(system.jacobian(x, f), -f, trace)
        damping = 1.0
        while True:
            trial = x + damping * step
            if system.admissible(trial):
                f_trial = system.residual(trial)
                n_trial = float(np.max(np.abs(f_trial)))
                if np.isfinite(n_trial) and n_trial < (1.0 - 1e-4 * damping) * norm:
                    break
            damping *= 0.5
            if damping < 2.0**-20:
                raise SolverError("local model Newton line search failed (positivity or descent)", trace=trace)
        x, f, norm = trial, f_trial, n_trial
        trace.append(norm)
    # Extra full steps give relative accuracy in exponentially small tail values.
    for _ in range(polish):
        step = _linear_solve(system.jacobian(x, f), -f, trace)
        trial = x + step
        if not system.admissible(trial):
            break
        f_trial = system.residual(trial)
        n_trial = float(np.max(np.abs(f_trial)))
        if not n_trial <= max(tol, norm):
            break
        x, f, norm = trial, f_trial, n_trial
        it += 1
        trace.append(norm)
    return x, norm, it, trace


def _linear_solve(jac, rhs, trace, refine=3):
    try:
        lu = spla.splu(jac, permc_spec="NATURAL")
    except RuntimeError as exc:
        raise SolverError(f"singular Jacobian: {exc}", trace=trace) from exc
    sol = lu.solve(rhs)
    # Fixed-precision refinement makes the solve componentwise accurate, which
    # keeps exponentially small tail corrections free of cancellation noise.
    for _ in range(refine):
        sol = sol + lu.solve(rhs - jac @ sol)
    if not np.all(np.isfinite(sol)):
        raise SolverError("non-finite Newton step", trace=trace)
    return sol


def _lambda0_guess(system, psol):
    t = system.t
    rho_in, rho_out = system.rho_in, system.rho_out
    phi_in = painleve.eval_psi(psol, LAMBDA0_ARGUMENT * t * rho_in**1.5)[0]
    phi_out = painleve.eval_psi(psol, LAMBDA0_ARGUMENT * t * rho_out**1.5)[0]
    inner = np.stack([rho_in * np.exp(2 * phi_in), np.exp(-2 * phi_in) / rho_in, np.zeros_like(rho_in)], axis=1)
    lc = math.log(4.0)
    ch = np.cosh(2 * phi_out)
    da = np.log(ch) + np.log(1.0 / rho_out) - system.a_inf(lc)
    db = np.log(ch) + np.log(1.0 / rho_out) - system.b_inf(lc)
    outer = np.stack([da, db, np.sinh(2 * phi_out) / rho_out], axis=1)
    return system.pack(inner, outer, lc)


def _grid(t, rho_max, n_nodes, u_min, u_switch):
    scale = t ** (-2.0 / 3.0)
    rho_min = u_min * scale
    if not rho_max > u_switch * scale * 2:
        raise DomainError("rho_max too small for the split grid")
    rho = np.exp(np.linspace(math.log(rho_min), math.log(rho_max), int(n_nodes)))
    switch = int(np.argmin(np.abs(np.log(rho / (u_switch * scale)))))
    if switch < 8 or rho.size - switch < 8:
        raise DomainError("too few nodes on one side of the split point")
    return rho, switch


def _finish(system, x, lam, norm, iters, trace, tol):
    t = system.t
    k = system.k
    inner, outer, logc = system.unpack(x)
    c = math.exp(logc)
    rho = system.rho
    u = t ** (2.0 / 3.0) * rho
    t23 = t ** (2.0 / 3.0)
    a_in = inner[:, 0] * t23  # t = 1 normalization
    b_in = inner[:, 1] / t23
    f3_in = inner[:, 2]
    da, db, r_phys = outer.T
    c_hat = math.exp(logc) * np.exp(db)
    da, db = system.clean_tail(da, db, r_phys, logc)
    r1 = r_phys / t23
    u_out = u[k:]
    p_inf, q_inf = _m_infty_arrays(lam, c, u_out)
    p, q = p_inf * np.exp(da), q_inf * np.exp(db)
    f1 = np.empty_like(u)
    f2 = np.empty_like(u)
    f3 = np.empty_like(u)
    f1[: k + 1] = a_in / u[: k + 1]
    f2[: k + 1] = b_in * u[: k + 1]
    f3[: k + 1] = f3_in
    f1[k + 1 :] = 0.5 * u_out[1:] * (p[1:] + 2 * r1[1:] + q[1:])
    f2[k + 1 :] = 0.5 * u_out[1:] * (p[1:] - 2 * r1[1:] + q[1:])
    f3[k + 1 :] = 0.5 * u_out[1:] * (q[1:] - p[1:])
    window = u_out >= 0.5 * u_out[-1]
    c_err = float(np.max(np.abs(c_hat[window] - c)))
    sol = LocalModelSolution(
        lam=float(lam),
        t=float(t),
        grid=rho,
        f1=f1,
        f2=f2,
        f3=f3,
        c_lambda=c,
        residual_max=norm,
        c_error=c_err,
        switch=k,
        delta_a=da.copy(),
        delta_b=db.copy(),
        r=r1,
        iterations=iters,
        trace=trace,
        state=x.copy(),
    )
    _check_invariants(sol)
    return sol


def _check_invariants(sol):
    h11 = sol.u * sol.f1
    h22 = sol.f2 / sol.u
    det = h11 * h22 - sol.f3**2
    if not (np.all(sol.f1 > 0) and np.all(sol.f2 > 0) and np.all(det > 0)):
        raise SolverError("positivity lost in the converged profiles", detail={"min_det": float(det.min())})


def solve_local_model(
    t=1.0,
    lam=0.0,
    rho_max=None,
    n_nodes=2048,
    tol=1e-10,
    *,
    u_min=1e-4,
    u_switch=1.0,
    accuracy=4,
    max_iter=40,
    lambda_step=0.05,
    painleve_solution=None,
    initial=None,
):
    """Solve the radial boundary value problem for the local model.

    Parameters
    ----------
    t : float
        Positive coupling.
    lam : float
        Weight with ``|lam| < 1/4``.
    rho_max : float, optional
        Outer radius; defaults to ``40 t^(-2/3)``.  Must satisfy
        ``t^(2/3) rho_max >= 10``.
    n_nodes : int
        Number of log-spaced nodes.
    tol : float
        Newton tolerance on the scaled residual.
    u_min, u_switch : float
        Innermost node and split point in the variable ``u = t^(2/3) rho``.
    accuracy : {2, 4}
        Formal order of the finite-difference stencils.
    lambda_step : float
        Largest continuation step in lambda.
    painleve_solution : PainleveSolution, optional
        Seed for lambda = 0; the default transcendent is used otherwise.
    initial : LocalModelSolution, optional
        Converged solution on the same grid to continue from.

    Returns
    -------
    LocalModelSolution

    Raises
    ------
    DomainError
        For parameters outside the admissible range.
    SolverError
        On Newton failure or loss of positivity.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if not abs(lam) < 0.25:
        raise DomainError("need |lambda| < 1/4")
    if rho_max is None:
        rho_max = 40.0 * t ** (-2.0 / 3.0)
    if t ** (2.0 / 3.0) * rho_max < 10.0:
        raise DomainError("rho_max must satisfy t^(2/3) rho_max >= 10")
    rho, switch = _grid(t, rho_max, n_nodes, u_min, u_switch)
    if initial is not None and initial.grid.size == rho.size and np.allclose(initial.grid, rho, rtol=1e-13):
        x = initial.state.copy()
        lam_from = initial.lam
    else:
        psol = painleve_solution or painleve.default_solution()
        x = _lambda0_guess(_RadialSystem(t, 0.0, rho, switch, accuracy), psol)
        lam_from = 0.0
    total, trace = 0, []
    step = min(lambda_step, max(abs(lam - lam_from), 1e-300))
    current = lam_from
    first = True
    while True:
        target = lam if abs(lam - current) <= step else current + math.copysign(step, lam - current)
        if first:
            target = current
        system = _RadialSystem(t, target, rho, switch, accuracy)
        try:
            x_new, norm, iters, tr = _newton(system, x, tol, max_iter)
        except SolverError as exc:
            if first or step < 1e-3:
                raise SolverError(f"continuation failed at lambda = {target}: {exc}", trace=trace + exc.trace) from exc
            step *= 0.5
            continue
        x, current = x_new, target
        total += iters
        trace.extend(tr)
        first = False
        if current == lam:
            return _finish(system, x, lam, norm, total, trace, tol)


# ---------------------------------------------------------------------------
# Evaluation


def _profiles_at(sol, u):
    """``(A1, B1, F)`` of the t = 1 metric at radii u (vectorized)."""
    u = np.asarray(u, dtype=float)
    sig = np.log(u)
    sp_ = sol._splines
    a = np.empty_like(u)
    b = np.empty_like(u)
    f = np.empty_like(u)
    lo = u < sol.u_min
    inner = (u >= sol.u_min) & (u <= sol.u_switch)
    outer = (u > sol.u_switch) & (u <= sol.u_max)
    tail = u > sol.u_max
    if np.any(lo):
        # Regular extension: diagonal constant, off-diagonal linear in rho.
        a[lo] = sp_["a"](math.log(sol.u_min))
        b[lo] = sp_["b"](math.log(sol.u_min))
        f[lo] = sp_["f"](math.log(sol.u_min)) * u[lo] / sol.u_min
    if np.any(inner):
        a[inner] = sp_["a"](sig[inner])
        b[inner] = sp_["b"](sig[inner])
        f[inner] = sp_["f"](sig[inner])
    for mask, delta in ((outer, True), (tail, False)):
        if not np.any(mask):
            continue
        uu = u[mask]
        p, q = _m_infty_arrays(sol.lam, sol.c_lambda, uu)
        r = np.zeros_like(uu)
        if delta:
            p = p * np.exp(sp_["da"](sig[mask]))
            q = q * np.exp(sp_["db"](sig[mask]))
            r = np.exp(sp_["logr"](sig[mask])) if "logr" in sp_ else sp_["r"](sig[mask])
        a[mask] = 0.5 * uu**2 * (p + 2 * r + q)
        b[mask] = 0.5 * (p - 2 * r + q)
        f[mask] = 0.5 * uu * (q - p)
    return a, b, f


def eval_M_lambda(sol, rho):
    """The t = 1 matrix ``M_lambda`` at radius ``rho`` in the variable u.

    Returns a HermMatrix2 for scalar input and an array of shape (n, 2, 2)
    otherwise.  Beyond the grid the decoupled asymptote is returned.
    """
    u = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(u <= 0):
        raise DomainError("rho must be positive")
    out = np.empty(u.shape + (2, 2))
    sig = np.log(u)
    sp_ = sol._splines
    outer = (u >= sol.u_switch) & (u <= sol.u_max)
    tail = u > sol.u_max
    inner = ~(outer | tail)
    p_inf, q_inf = _m_infty_arrays(sol.lam, sol.c_lambda, u)
    if np.any(inner):
        a, b, f = _profiles_at(sol, u[inner])
        uu = u[inner]
        f1, f2 = a / uu, b * uu
        out[inner, 0, 0] = (f1 + f2 - 2 * f) / (2 * uu)
        out[inner, 1, 1] = (f1 + f2 + 2 * f) / (2 * uu)
        out[inner, 0, 1] = out[inner, 1, 0] = (f1 - f2) / (2 * uu)
    if np.any(outer):
        out[outer, 0, 0] = p_inf[outer] * np.exp(sp_["da"](sig[outer]))
        out[outer, 1, 1] = q_inf[outer] * np.exp(sp_["db"](sig[outer]))
        r = np.exp(sp_["logr"](sig[outer])) if "logr" in sp_ else sp_["r"](sig[outer])
        out[outer, 0, 1] = out[outer, 1, 0] = r
    if np.any(tail):
        out[tail, 0, 0] = p_inf[tail]
        out[tail, 1, 1] = q_inf[tail]
        out[tail, 0, 1] = out[tail, 1, 0] = 0.0
    if np.ndim(rho) == 0:
        m = out[0]
        return HermMatrix2(float(m[0, 0]), float(m[1, 1]), float(m[0, 1]))
    return out


def _H_field(sol, zeta):
    zeta = np.asarray(zeta, dtype=complex)
    rho = np.abs(zeta)
    t23 = sol.t ** (2.0 / 3.0)
    a, b, f = _profiles_at(sol, np.maximum(t23 * rho, 1e-300))
    phase = np.exp(-1j * np.angle(zeta))
    h = np.empty(zeta.shape + (2, 2), dtype=complex)
    h[..., 0, 0] = a / t23
    h[..., 1, 1] = b * t23
    h[..., 0, 1] = f * phase
    h[..., 1, 0] = f * np.conj(phase)
    return h


def eval_H_t_lambda(sol, zeta):
    """The metric ``H_{t,lambda}(zeta)`` in the regular frame.

    Scalar input returns a HermMatrix2; array input an array (..., 2, 2).
    At ``zeta = 0`` the continuous extension with vanishing off-diagonal is used.
    """
    h = _H_field(sol, zeta)
    if np.ndim(zeta) == 0:
        return HermMatrix2(float(h[0, 0].real), float(h[1, 1].real), complex(h[0, 1]))
    return h


def extract_c_lambda(sol):
    """Coefficient c and its error bar from ``4 M22(u) u^(1 - 2 lambda)``.

    The estimate is read at the last node; the error bar is the spread of the
    same estimate over the outer half ``[u_max/2, u_max]`` of the grid.

    Raises
    ------
    SolverError
        When the spread exceeds ``1e-6`` relative, signalling an unreliable tail.
    """
    _, q, _ = sol.outer_pqr()
    u = sol.u[sol.switch :]
    c_hat = 4.0 * q * u ** (1.0 - 2.0 * sol.lam)
    window = u >= 0.5 * u[-1]
    value = float(c_hat[-1])
    err = float(np.max(np.abs(c_hat[window] - value)))
    if err > 1e-6 * value:
        raise SolverError("c extraction tail not converged", detail={"spread": err, "c": value})
    return value, err


def extrapolate_c(values):
    """Aitken extrapolation of a sequence of c estimates at increasing rho_max.

    Falls back to the last value when consecutive differences are at rounding level.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return float(v[-1])
    d1, d2 = v[-1] - v[-2], v[-2] - v[-3]
    denom = d1 - d2
    if abs(d1) <= 1e-13 * abs(v[-1]) or denom == 0:
        return float(v[-1])
    return float(v[-1] - d1 * d1 / denom)


def lambda0_oracle(psol, t, rho):
    """Closed-form metric at lambda = 0: ``diag(rho e^{2 phi}, rho^-1 e^{-2 phi})``.

    Here ``phi = psi((4/3) t rho^(3/2))``; the factor 4/3 is the one for which
    this diagonal metric solves the R-type equation with the normalized forms
    ``b = (zeta, 1)/sqrt2``, ``g = (1, zeta)^T/sqrt2``.
    """
    if rho <= 0:
        raise DomainError("rho must be positive")
    phi, _ = painleve.eval_psi(psol, LAMBDA0_ARGUMENT * t * rho**1.5)
    return HermMatrix2(rho * math.exp(2 * phi), math.exp(-2 * phi) / rho, 0.0)


def lambda0_M_oracle(psol, u):
    """``M_0(u) = (1/u) [[cosh 2phi, sinh 2phi], [sinh 2phi, cosh 2phi]]``, array form."""
    u = np.asarray(u, dtype=float)
    phi, _ = painleve.eval_psi(psol, LAMBDA0_ARGUMENT * u**1.5)
    ch, sh = np.cosh(2 * phi) / u, np.sinh(2 * phi) / u
    return np.stack([np.stack([ch, sh], -1), np.stack([sh, ch], -1)], -2)


def pde_residual(sol, samples, step=2e-3):
    """Maximum entry modulus of the two-dimensional Hitchin operator at samples.

    Derivatives in ``log rho`` and ``theta`` are fourth-order central
    differences of ``eval_H_t_lambda`` with the given step.
    """
    z = np.asarray(samples, dtype=complex).ravel()
    if np.any(z == 0):
        raise DomainError("samples must avoid zeta = 0")
    offs = np.arange(-2, 3)
    s = np.log(np.abs(z))
    th = np.angle(z)
    hs = np.stack([_H_field(sol, np.exp(s + k * step + 1j * th)) for k in offs])
    ht = np.stack([_H_field(sol, np.exp(s + 1j * (th + k * step))) for k in offs])
    w1 = np.array([1, -8, 0, 8, -1]) / (12 * step)
    w2 = np.array([-1, 16, -30, 16, -1]) / (12 * step**2)
    h = hs[2]
    h_s = np.tensordot(w1, hs, axes=1)
    h_ss = np.tensordot(w2, hs, axes=1)
    h_t = np.tensordot(w1, ht, axes=1)
    h_tt = np.tensordot(w2, ht, axes=1)
    val = hitchin_operator(h, h_s, h_ss, h_t, h_tt, z, R_REGULAR_FORMS, sol.t)
    return float(np.max(np.abs(val)))


def block_form_det(sol, zeta):
    """Determinant of the 3x3 block form ``diag(det K^-1, K)``, identically 1."""
    h = eval_H_t_lambda(sol, zeta)
    return block_form(h.array).det


def scaling_defect(sol_1, sol_t, zetas):
    """Sup of ``|H_t(z) - Gamma^-* H_1(t^(2/3) z) Gamma^-1| / |H_t(z)|`` over samples.

    ``Gamma = diag(t^(1/3), t^(-1/3))``; the ratio uses the max-entry norm.
    """
    t = sol_t.t / sol_1.t
    z = np.asarray(zetas, dtype=complex)
    g = np.diag([t ** (-1.0 / 3.0), t ** (1.0 / 3.0)])
    h_t = _H_field(sol_t, z)
    h_1 = _H_field(sol_1, t ** (2.0 / 3.0) * z)
    pred = g @ h_1 @ g
    num = np.max(np.abs(h_t - pred), axis=(-1, -2))
    den = np.max(np.abs(h_t), axis=(-1, -2))
    return float(np.max(num / den))


def tail_decay_fit(sol, u_lo=5.0, u_hi=30.0):
    """Line fit of ``log |M - M_inf|`` against u on the grid nodes in ``[u_lo, u_hi]``.

    The norm is the max-entry modulus, evaluated from the outer unknowns with
    ``expm1`` so exponentially small deviations keep relative precision.
    """
    from .fitting import linear_fit

    k = sol.switch
    u = sol.u[k:]
    p_inf, q_inf = _m_infty_arrays(sol.lam, sol.c_lambda, u)
    dev = np.maximum.reduce([np.abs(p_inf * np.expm1(sol.delta_a)), np.abs(q_inf * np.expm1(sol.delta_b)), np.abs(sol.r)])
    mask = (u >= u_lo) & (u <= u_hi)
    if mask.sum() < 3 or np.any(dev[mask] <= 0):
        raise DomainError("tail fit window empty or deviation underflowed")
    return linear_fit(u[mask], np.log(dev[mask]))


def _table_row(args):
    lam, t, config = args
    try:
        sol = solve_local_model(t=t, lam=lam, **config)
        c, err = extract_c_lambda(sol)
        return (lam, c, err, "")
    except (SolverError, DomainError) as exc:
        return (lam, float("nan"), float("nan"), str(exc))


def c_lambda_table(lambda_grid, t=1.0, config=None, jobs=1, delta=1e-3):
    """Table of ``(lambda, c_lambda, error, message)`` rows.

    Rows are solved independently; with ``jobs == 1`` they are chained by
    continuation outward from lambda = 0 for speed, each row still starting
    from a converged neighbor.  Failures are recorded per row.
    """
    grid = [float(v) for v in lambda_grid]
    if any(abs(v) > 0.25 - delta for v in grid):
        raise DomainError("all lambda must satisfy |lambda| <= 1/4 - delta")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("lambda grid must be strictly increasing")
    config = dict(config or {})
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_table_row, [(lam, t, config) for lam in grid]))
    rows = {}
    base = solve_local_model(t=t, lam=0.0, **config)
    for side in (sorted([v for v in grid if v >= 0]), sorted([v for v in grid if v < 0], reverse=True)):
        prev = base
        for lam in side:
            try:
                sol = solve_local_model(t=t, lam=lam, initial=prev, **config)
                c, err = extract_c_lambda(sol)
                rows[lam] = (lam, c, err, "")
                prev = sol
            except (SolverError, DomainError) as exc:
                rows[lam] = (lam, float("nan"), float("nan"), str(exc))
    return [rows[v] for v in grid]
