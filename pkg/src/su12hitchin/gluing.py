"""Approximate solutions on model disks around the zeros of the quadratic differential.

Each zero type has a local normal form of the Higgs components and an
approximate metric obtained by cutting off the exact local model against the
decoupled solution:

* R type: ``t^(2/3) G(chi)* M_lambda(t^(2/3) rho / chi) G(chi)`` in the
  singular frame, with ``G(y) = diag(y^(-2 lambda - 1/2), y^(lambda - 1/2))``;
  it equals ``t^(2/3) M_lambda(t^(2/3) rho)`` for ``rho <= R/3`` and the
  decoupled asymptote ``t^(2/3) M_inf(t^(2/3) rho)`` for ``rho >= 2R/3``.
* beta type: ``diag(rho^(1/2) exp(chi psi_P), 1)``.
* gamma type: ``diag(rho^(-1/2) exp(-chi psi_P), 1)``.

All three fields are rotationally invariant in the frames used here, so the
Hitchin operator has no angular discretization error.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import localmodel, painleve
from .errors import ConfigurationError, DomainError
from .fitting import linear_fit
from .hermlin import HermMatrix2
from .polar import HiggsForms, hitchin_operator, polar_derivatives

__all__ = [
    "ZeroType",
    "GluedMetricSpec",
    "cutoff_chi",
    "cutoff_chi_derivatives",
    "local_higgs_forms",
    "make_glued_spec",
    "H_app_at",
    "H_app_field",
    "hitchin_residual_field",
    "glued_residual",
    "interior_exterior_mismatch",
    "decoupled_local",
    "decoupled_weight",
    "residual_sweep",
    "SweepResult",
]


class ZeroType(Enum):
    """Types of zeros of the quadratic differential."""

    BETA = "beta"
    GAMMA = "gamma"
    R = "r"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError as exc:
            raise DomainError(f"unknown zero type {value!r}") from exc


# ---------------------------------------------------------------------------
# Cutoff


def _smoothstep(x):
    return x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


def cutoff_chi(rho, R):
    """Quintic C^2 cutoff: 1 on ``[0, R/3]``, 0 on ``[2R/3, inf)``.

    Parameters
    ----------
    rho : float or array_like
        Nonnegative radii.
    R : float
        Disk radius.
    """
    if not R > 0:
        raise DomainError("R must be positive")
    rho_a = np.asarray(rho, dtype=float)
    if np.any(rho_a < 0):
        raise DomainError("rho must be nonnegative")
    x = np.clip(3.0 * rho_a / R - 1.0, 0.0, 1.0)
    out = np.clip(1.0 - _smoothstep(x), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def cutoff_chi_derivatives(rho, R):
    """First and second rho-derivatives of :func:`cutoff_chi`."""
    rho_a = np.asarray(rho, dtype=float)
    x = np.clip(3.0 * rho_a / R - 1.0, 0.0, 1.0)
    k = 3.0 / R
    d1 = -30.0 * x * x * (1.0 - x) ** 2 * k
    d2 = -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) * k * k
    return d1, d2


# ---------------------------------------------------------------------------
# Higgs forms


_BETA_FORMS = HiggsForms(beta=np.array([[0, 0], [1, 0]]), gamma=np.array([[1, 0]]))
_GAMMA_FORMS = HiggsForms(beta=np.array([[1, 0]]), gamma=np.array([[0, 0], [1, 0]]))


def local_higgs_forms(zero_type, singular=False):
    """Local forms ``(beta0, gamma0)`` as a :class:`HiggsForms`.

    Parameters
    ----------
    zero_type : ZeroType or str
    singular : bool
        For R type, return the forms ``(0, 1/zeta)`` and ``(0, zeta^2)^T`` of
        the singular frame instead of the regular ones.
    """
    zt = ZeroType.parse(zero_type)
    if zt is ZeroType.R:
        return localmodel.R_SIGMA_FORMS if singular else localmodel.R_REGULAR_FORMS
    return _BETA_FORMS if zt is ZeroType.BETA else _GAMMA_FORMS


# ---------------------------------------------------------------------------
# Glued metrics


@dataclass(frozen=True, eq=False)
class GluedMetricSpec:
    """Data of an approximate metric on one model disk.

    Attributes
    ----------
    zero_type : ZeroType
    t : float
    R : float
        Disk radius; the cutoff transition happens on ``[R/3, 2R/3]``.
    lam : float or None
        Required for R type, ``|lam| < 1/4``.
    model : LocalModelSolution or None
        Local model for R type, solved at the same lambda (any t).
    painleve : PainleveSolution or None
        Painlevé transcendent for beta and gamma types.
    """

    zero_type: ZeroType
    t: float
    R: float = 1.0
    lam: float = None
    model: object = None
    painleve: object = None

    def __post_init__(self):
        object.__setattr__(self, "zero_type", ZeroType.parse(self.zero_type))
        if not self.t > 0:
            raise DomainError("t must be positive")
        if not self.R > 0:
            raise DomainError("R must be positive")
        if self.zero_type is ZeroType.R:
            if self.lam is None or not abs(self.lam) < 0.25:
                raise DomainError("R type needs |lambda| < 1/4")
            if self.model is not None and abs(self.model.lam - self.lam) > 1e-12:
                raise ConfigurationError("local model solved at a different lambda")


def make_glued_spec(zero_type, t, R=1.0, lam=0.0, **solver_options):
    """Build a :class:`GluedMetricSpec` together with the model it needs."""
    zt = ZeroType.parse(zero_type)
    if zt is ZeroType.R:
        model = localmodel.solve_local_model(t=1.0, lam=lam, **solver_options)
        return GluedMetricSpec(zt, t, R, lam=lam, model=model)
    return GluedMetricSpec(zt, t, R, painleve=painleve.default_solution())


def _sigma_frame(zeta):
    """``S = [[zeta, -1], [zeta, 1]] / sqrt2`` with ``M = S^-* H S^-1``."""
    s = np.empty(np.shape(zeta) + (2, 2), dtype=complex)
    s[..., 0, 0] = zeta
    s[..., 0, 1] = -1.0
    s[..., 1, 0] = zeta
    s[..., 1, 1] = 1.0
    return s / math.sqrt(2.0)


def _r_type_sigma(spec, rho):
    """Glued R-type metric in the singular frame at radii ``rho > 0``."""
    if spec.model is None:
        raise ConfigurationError("R type needs a local model handle")
    t23 = spec.t ** (2.0 / 3.0)
    lam = spec.lam
    chi = cutoff_chi(rho, spec.R)
    chi = np.atleast_1d(chi)
    rho = np.atleast_1d(rho)
    out = np.empty(rho.shape + (2, 2), dtype=complex)
    # Beyond the model grid G* M G reduces exactly to the asymptote.
    with np.errstate(divide="ignore"):
        ext = t23 * rho >= spec.model.u_max * chi
    if np.any(ext):
        p, q = localmodel._m_infty_arrays(lam, spec.model.c_lambda, t23 * rho[ext])
        out[ext] = 0.0
        out[ext, 0, 0] = t23 * p
        out[ext, 1, 1] = t23 * q
    inn = ~ext
    if np.any(inn):
        y = chi[inn]
        m = localmodel.eval_M_lambda(spec.model, t23 * rho[inn] / y)
        g1 = y ** (-2.0 * lam - 0.5)
        g2 = y ** (lam - 0.5)
        out[inn, 0, 0] = t23 * g1 * g1 * m[:, 0, 0]
        out[inn, 1, 1] = t23 * g2 * g2 * m[:, 1, 1]
        out[inn, 0, 1] = out[inn, 1, 0] = t23 * g1 * g2 * m[:, 0, 1]
    return out


def _diag_type(spec, rho):
    if spec.painleve is None:
        raise ConfigurationError("beta and gamma types need a Painlevé handle")
    rho = np.atleast_1d(rho)
    chi = np.atleast_1d(cutoff_chi(rho, spec.R))
    out = np.zeros(rho.shape + (2, 2), dtype=complex)
    sign = 1.0 if spec.zero_type is ZeroType.BETA else -1.0
    psi = painleve.psi_P(spec.painleve, spec.t, rho)
    out[..., 0, 0] = rho ** (0.5 * sign) * np.exp(sign * chi * psi)
    out[..., 1, 1] = 1.0
    return out


def H_app_field(spec, zeta, frame="natural"):
    """Approximate metric at an array of points, shape ``(..., 2, 2)``.

    Parameters
    ----------
    spec : GluedMetricSpec
    zeta : array_like
        Points with ``|zeta| <= R``; ``zeta = 0`` is excluded for beta and
        gamma types and, in the singular frame, for R type.
    frame : {"natural", "regular"}
        For R type, "natural" is the singular frame of ``M`` and "regular" the
        frame in which the Higgs forms are ``(zeta, 1)/sqrt2`` and
        ``(1, zeta)^T/sqrt2``.  Ignored for the other types.
    """
    zeta = np.asarray(zeta, dtype=complex)
    rho = np.abs(zeta)
    if np.any(rho > spec.R * (1.0 + 1e-12)):
        raise DomainError("points must lie in the disk |zeta| <= R")
    flat = rho.ravel()
    if spec.zero_type is not ZeroType.R:
        if np.any(flat == 0):
            raise DomainError("beta and gamma fields are evaluated away from zeta = 0")
        return _diag_type(spec, flat).reshape(zeta.shape + (2, 2))
    if frame == "natural":
        if np.any(flat == 0):
            raise DomainError("the singular frame excludes zeta = 0")
        return _r_type_sigma(spec, flat).reshape(zeta.shape + (2, 2))
    if frame != "regular":
        raise DomainError(f"unknown frame {frame!r}")
    zf = zeta.ravel()
    out = np.empty(zf.shape + (2, 2), dtype=complex)
    core = flat <= spec.R / 3.0
    if np.any(core):
        # chi = 1: the local model itself, regular at the origin.
        out[core] = _model_regular(spec, zf[core])
    rest = ~core
    if np.any(rest):
        s = _sigma_frame(zf[rest])
        m = _r_type_sigma(spec, flat[rest])
        out[rest] = np.conj(np.swapaxes(s, -1, -2)) @ m @ s
    return out.reshape(zeta.shape + (2, 2))


def _model_regular(spec, zeta):
    """``t^(2/3) M_lambda``-based metric in the regular frame at scale t."""
    t23 = spec.t ** (2.0 / 3.0)
    a, b, f = localmodel._profiles_at(spec.model, np.maximum(t23 * np.abs(zeta), 1e-300))
    phase = np.exp(-1j * np.angle(zeta))
    h = np.empty(zeta.shape + (2, 2), dtype=complex)
    h[..., 0, 0] = a / t23
    h[..., 1, 1] = b * t23
    h[..., 0, 1] = f * phase
    h[..., 1, 0] = f * np.conj(phase)
    return h


def H_app_at(spec, zeta, frame="natural"):
    """Approximate metric at one point as a :class:`HermMatrix2`."""
    h = H_app_field(spec, np.array([zeta]), frame=frame)[0]
    return HermMatrix2(float(h[0, 0].real), float(h[1, 1].real), complex(h[0, 1]))


# ---------------------------------------------------------------------------
# Residuals


def _annulus(region, grid):
    r_in, r_out = region
    if not 0 < r_in < r_out:
        raise DomainError("annulus must satisfy 0 < r_in < r_out")
    n_r, n_a = grid
    s = np.linspace(math.log(r_in), math.log(r_out), int(n_r))
    th = 2.0 * np.pi * np.arange(int(n_a)) / int(n_a)
    zeta = np.exp(s[:, None] + 1j * th[None, :])
    return zeta, s[1] - s[0], th[1] - th[0]


def hitchin_residual_field(sampler, forms, t, region, grid=(256, 128), accuracy=4):
    """Finite-difference Hitchin operator of a sampled metric on an annulus.

    Parameters
    ----------
    sampler : callable
        Maps an array of points to metrics of shape ``(..., 2, 2)``.
    forms : HiggsForms
    t : float
    region : (float, float)
        Inner and outer radius.
    grid : (int, int)
        Radial (log-uniform) and angular node counts.
    accuracy : {2, 4}
        Formal order of the stencils.

    Returns
    -------
    max_residual : float
        Max entry modulus of the operator over the grid.
    samples : ndarray, shape (n_r, n_a, 2, 2)
        The operator at each node.
    """
    zeta, hs, ht = _annulus(region, grid)
    h = np.asarray(sampler(zeta), dtype=complex)
    det = (h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]).real
    bad = ~((h[..., 0, 0].real > 0) & (det > 0))
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise DomainError(f"metric not positive definite at zeta = {zeta[tuple(idx)]:.6g}")
    h_s, h_ss, h_t, h_tt = polar_derivatives(h, hs, ht, accuracy)
    val = hitchin_operator(h, h_s, h_ss, h_t, h_tt, zeta, forms, t)
    return float(np.max(np.abs(val))), val


def glued_residual(spec, region=None, grid=(256, 128), accuracy=4):
    """Max residual of the glued metric on the transition annulus."""
    if region is None:
        region = (spec.R / 3.0, 2.0 * spec.R / 3.0)
    forms = local_higgs_forms(spec.zero_type, singular=True)
    return hitchin_residual_field(lambda z: H_app_field(spec, z), forms, spec.t, region, grid, accuracy)


def interior_exterior_mismatch(spec, rho):
    """Relative difference between the interior and exterior R-type formulas."""
    if spec.zero_type is not ZeroType.R:
        raise DomainError("only defined for R type")
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    t23 = spec.t ** (2.0 / 3.0)
    m = localmodel.eval_M_lambda(spec.model, t23 * rho)
    p, q = localmodel._m_infty_arrays(spec.lam, spec.model.c_lambda, t23 * rho)
    num = np.maximum.reduce([np.abs(m[:, 0, 0] - p), np.abs(m[:, 1, 1] - q), np.abs(m[:, 0, 1])])
    return float(np.max(num / np.maximum(p, q)))


# ---------------------------------------------------------------------------
# Decoupled solutions


def decoupled_local(f, rho):
    """The decoupled metric ``diag(f^-2 rho^-1, f rho^-1)``."""
    if not (f > 0 and rho > 0):
        raise DomainError("f and rho must be positive")
    return HermMatrix2(1.0 / (f * f * rho), f / rho, 0.0)


def decoupled_weight(c_lambda, lam, t, rho):
    """``f = (c/4) t^(4 lambda / 3) rho^(2 lambda)``, giving ``t^(2/3) M_inf(t^(2/3) rho)``."""
    return 0.25 * c_lambda * t ** (4.0 * lam / 3.0) * rho ** (2.0 * lam)


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepResult:
    """Residuals over t and the fit of their logarithm against ``t_pow``."""

    zero_type: ZeroType
    t: np.ndarray
    t_pow: np.ndarray
    max_residual: np.ndarray
    slope: float
    intercept: float
    r2: float


def _sweep_point(args):
    zt, t, R, lam, model, grid, accuracy = args
    if zt is ZeroType.R:
        spec = GluedMetricSpec(zt, t, R, lam=lam, model=model)
    else:
        spec = GluedMetricSpec(zt, t, R, painleve=painleve.default_solution())
    return glued_residual(spec, grid=grid, accuracy=accuracy)[0]


def residual_sweep(zero_type, t_list, R=1.0, lam=0.0, grid=(256, 128), accuracy=4, jobs=1, model=None):
    """Glued residuals for several t and a line fit of ``log`` residual.

    The abscissa is ``t^(2/3)`` for R type and ``t`` for beta and gamma types.
    """
    zt = ZeroType.parse(zero_type)
    t = np.asarray(sorted(float(v) for v in t_list))
    if t.size < 2 or np.any(t <= 0):
        raise DomainError("need at least two positive t values")
    if zt is ZeroType.R and model is None:
        model = localmodel.solve_local_model(t=1.0, lam=lam)
    args = [(zt, tv, R, lam, model, tuple(grid), accuracy) for tv in t]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            res = list(pool.map(_sweep_point, args))
    else:
        res = [_sweep_point(a) for a in args]
    res = np.asarray(res)
    t_pow = t ** (2.0 / 3.0) if zt is ZeroType.R else t
    if np.any(res <= 0):
        raise DomainError("residual underflowed; cannot fit its logarithm")
    fit = linear_fit(t_pow, np.log(res))
    return SweepResult(zt, t, t_pow, res, fit.slope, fit.intercept, fit.r2)
