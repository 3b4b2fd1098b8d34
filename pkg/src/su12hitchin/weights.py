"""Admissible parabolic weights: stability, polytope faces, barycenter and t-compatible weights.

Weights are ordered as ``(D_beta block, D_gamma block, D_r block)``.  The
convention used throughout is ``lambda = +1/4`` on ``D_beta`` and ``-1/4`` on
``D_gamma``, with ``|lambda| < 1/4`` on ``D_r`` and ``sum(lambda) = -d``.  A
partition is stable exactly when this open face is nonempty, which gives

    d_beta < 2 (g - 1 - d)   and   d_gamma < 2 (g - 1 + d),

and strictly polystable when both hold with equality (the face is a vertex of
the cube ``[-1/4, 1/4]^N``).

All combinatorial operations use :class:`fractions.Fraction`; floating point
appears only in the t-compatible fixed point.
"""

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from importlib import resources

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import root

from .errors import ConfigurationError, DomainError, SolverError

__all__ = [
    "SurfaceData",
    "ZeroPartition",
    "WeightVector",
    "Stability",
    "check_stability",
    "stability_by_feasibility",
    "barycenter",
    "polytope_vertices",
    "is_admissible",
    "enumerate_partitions",
    "PsiAffine",
    "load_psi",
    "CInterpolant",
    "solve_t_compatible",
    "fixed_point_map",
    "weight_drift_table",
    "self_map_radius",
]

QUARTER = Fraction(1, 4)


@dataclass(frozen=True)
class SurfaceData:
    """Genus ``g >= 2`` and degree ``d`` of the line bundle; ``N = 4g - 4`` zeros."""

    genus: int
    deg_l: int

    def __post_init__(self):
        if int(self.genus) != self.genus or self.genus < 2:
            raise DomainError("genus must be an integer >= 2")
        if int(self.deg_l) != self.deg_l:
            raise DomainError("deg L must be an integer")

    @property
    def n_zeros(self):
        return 4 * self.genus - 4


@dataclass(frozen=True)
class ZeroPartition:
    """Numbers of zeros of beta, gamma and R type."""

    d_beta: int
    d_gamma: int
    d_r: int

    def __post_init__(self):
        if min(self.d_beta, self.d_gamma, self.d_r) < 0:
            raise DomainError("partition entries must be nonnegative")

    @property
    def total(self):
        return self.d_beta + self.d_gamma + self.d_r

    def check(self, surface):
        if self.total != surface.n_zeros:
            raise DomainError(f"partition sums to {self.total}, expected 4g - 4 = {surface.n_zeros}")


@dataclass(frozen=True)
class WeightVector:
    """Weights ordered as ``(D_beta, D_gamma, D_r)`` blocks."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, item):
        return self.values[item]

    def as_strings(self):
        """Entries as ``"p/q"`` strings (exact) or decimal strings."""
        return [str(Fraction(v)) if isinstance(v, (int, Fraction)) else repr(float(v)) for v in self.values]


class Stability(Enum):
    STABLE = "stable"
    STRICTLY_POLYSTABLE = "strictly_polystable"
    UNSTABLE = "unstable"


def _bounds(surface, partition):
    g, d = surface.genus, surface.deg_l
    return 2 * (g - 1 - d) - partition.d_beta, 2 * (g - 1 + d) - partition.d_gamma


def check_stability(surface, partition):
    """Classify a partition of the zeros."""
    partition.check(surface)
    slack_beta, slack_gamma = _bounds(surface, partition)
    if slack_beta > 0 and slack_gamma > 0:
        return Stability.STABLE
    if slack_beta == 0 and slack_gamma == 0:
        return Stability.STRICTLY_POLYSTABLE
    return Stability.UNSTABLE


def stability_by_feasibility(surface, partition):
    """Classification from the face of the cube directly.

    The open face is nonempty iff the ``D_r`` block can carry the remaining
    sum strictly inside ``(-1/4, 1/4)^{d_r}``; the closed face is a single
    cube vertex iff ``d_r = 0`` and the fixed blocks already sum to ``-d``.
    """
    partition.check(surface)
    target = -surface.deg_l - QUARTER * (partition.d_beta - partition.d_gamma)
    if partition.d_r > 0 and abs(target) < QUARTER * partition.d_r:
        return Stability.STABLE
    if partition.d_r == 0 and target == 0:
        return Stability.STRICTLY_POLYSTABLE
    return Stability.UNSTABLE


def _center_value(surface, partition):
    return -(surface.deg_l + QUARTER * (partition.d_beta - partition.d_gamma)) / partition.d_r


def barycenter(surface, partition):
    """Barycenter of the admissible face, in exact rationals."""
    if check_stability(surface, partition) is not Stability.STABLE:
        raise DomainError("barycenter requires a stable partition")
    lam_c = _center_value(surface, partition)
    return WeightVector(
        [QUARTER] * partition.d_beta + [-QUARTER] * partition.d_gamma + [lam_c] * partition.d_r
    )


def polytope_vertices(surface, partition):
    """Vertices of the closed admissible face.

    The ``D_r`` block takes values ``+-1/4`` with exactly ``2(g-1-d) - d_beta``
    entries equal to ``+1/4``.
    """
    partition.check(surface)
    n_plus, n_minus = _bounds(surface, partition)
    if n_plus < 0 or n_minus < 0 or n_plus + n_minus != partition.d_r:
        raise DomainError("vertex counts are negative: the partition is unstable")
    head = [QUARTER] * partition.d_beta + [-QUARTER] * partition.d_gamma
    out = []
    for plus in itertools.combinations(range(partition.d_r), n_plus):
        block = [-QUARTER] * partition.d_r
        for k in plus:
            block[k] = QUARTER
        out.append(WeightVector(head + block))
    return out


def is_admissible(weights, surface, partition):
    """Open admissibility predicate, exact for rational entries."""
    vals = list(weights)
    if len(vals) != partition.total or partition.total != surface.n_zeros:
        return False
    nb, ng = partition.d_beta, partition.d_gamma
    if any(v != QUARTER for v in vals[:nb]) or any(v != -QUARTER for v in vals[nb : nb + ng]):
        return False
    if any(not abs(v) < QUARTER for v in vals[nb + ng :]):
        return False
    total = sum(vals)
    if isinstance(total, (int, Fraction)):
        return total == -surface.deg_l
    return math.isclose(float(total), -surface.deg_l, rel_tol=0.0, abs_tol=1e-12)


def enumerate_partitions(surface):
    """All partitions ``(d_beta, d_gamma, d_r)`` of ``4g - 4``."""
    n = surface.n_zeros
    return [ZeroPartition(b, c, n - b - c) for b in range(n + 1) for c in range(n + 1 - b)]


# ---------------------------------------------------------------------------
# t-compatible weights


@dataclass(frozen=True)
class PsiAffine:
    """Affine data ``psi_k(lambda) = offset_k + sum_l matrix[k, l] lambda_l`` on the ``D_r`` block."""

    offset: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.offset, dtype=float)
        mat = np.asarray(self.matrix, dtype=float)
        if off.ndim != 1 or mat.shape != (off.size, off.size):
            raise ConfigurationError("psi data: offset of length d_r and a d_r x d_r matrix required")
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def zero(cls, d_r):
        return cls(np.zeros(d_r), np.zeros((d_r, d_r)))

    def __call__(self, lam_r):
        return self.offset + self.matrix @ lam_r


def load_psi(path_or_name):
    """Read ``(SurfaceData, ZeroPartition, PsiAffine)`` from a JSON file.

    A bare name such as ``"psi_zero"`` refers to the bundled data files.
    """
    try:
        if str(path_or_name).endswith(".json"):
            with open(path_or_name, encoding="utf-8") as fh:
                data = json.load(fh)
        else:
            text = resources.files("su12hitchin").joinpath("data", f"{path_or_name}.json").read_text(encoding="utf-8")
            data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read psi data {path_or_name!r}: {exc}") from exc
    try:
        surface = SurfaceData(int(data["genus"]), int(data["deg_l"]))
        partition = ZeroPartition(*(int(v) for v in data["partition"]))
        partition.check(surface)
        psi = PsiAffine(data["offset"], data["matrix"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed psi data: {exc}") from exc
    if psi.offset.size != partition.d_r:
        raise ConfigurationError("psi data length differs from d_r")
    return surface, partition, psi


class CInterpolant:
    """Monotone cubic interpolant of ``lambda -> c_lambda``; no extrapolation.

    Parameters
    ----------
    lam, c : array_like
        Table rows with strictly increasing lambda; rows with non-finite c are
        dropped.
    """

    def __init__(self, lam, c):
        lam = np.asarray(lam, dtype=float)
        c = np.asarray(c, dtype=float)
        ok = np.isfinite(c)
        lam, c = lam[ok], c[ok]
        if lam.size < 2 or np.any(np.diff(lam) <= 0) or np.any(c <= 0):
            raise ConfigurationError("c table needs >= 2 increasing rows with positive c")
        self.lam_min, self.lam_max = float(lam[0]), float(lam[-1])
        self._log = PchipInterpolator(lam, np.log(c), extrapolate=False)

    @classmethod
    def from_table(cls, rows):
        rows = list(rows)
        return cls([r[0] for r in rows], [r[1] for r in rows])

    @classmethod
    def from_csv(cls, path):
        try:
            data = np.genfromtxt(path, delimiter=",", names=True)
            return cls(data["lambda"], data["c_lambda"])
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"cannot read c table {path!r}: {exc}") from exc

    def log_c(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam < self.lam_min) or np.any(lam > self.lam_max):
            raise DomainError("lambda outside the c table range")
        return self._log(lam)

    def __call__(self, lam):
        return np.exp(self.log_c(lam))


def _project(v):
    if np.all(v == v[0]):
        return np.zeros_like(v)
    return v - np.mean(v)


def fixed_point_map(mu, t, lam_c, psi, c_interp):
    """``F_t(mu) = pi(G_t(mu))`` on the ``D_r`` block offsets ``mu``."""
    lam_r = lam_c + mu
    g = 1.5 / math.log(t) * (psi(lam_r) - (0.5 * c_interp.log_c(lam_r) - math.log(2.0)))
    return _project(g)


@dataclass(frozen=True)
class TCompatibleResult:
    """Fixed point of the t-compatibility map."""

    weights: WeightVector
    mu: np.ndarray
    residual: float
    iterations: int
    method: str


def _inside(mu, lam_c):
    return bool(np.all(np.abs(lam_c + mu) < 0.25))


def solve_t_compatible(t, surface, partition, psi, c_interp, tol=1e-10, max_iter=500, t0=2.0):
    """t-compatible admissible weight by damped fixed-point iteration.

    The damping starts at 0.5, grows by 1.5 after a successful step (up to 1)
    and halves when the residual increases or the iterate leaves the open
    face.  When the iteration stalls, a Newton-type root solve of
    ``F_t(mu) - mu`` takes over.

    Returns
    -------
    TCompatibleResult
    """
    if not t >= t0 or t <= 1.0:
        raise DomainError(f"t must satisfy t >= {t0} and t > 1")
    if check_stability(surface, partition) is not Stability.STABLE:
        raise DomainError("t-compatible weights need a stable partition")
    lam_c = float(_center_value(surface, partition))
    d_r = partition.d_r

    def resid(mu):
        return fixed_point_map(mu, t, lam_c, psi, c_interp) - mu

    mu = np.zeros(d_r)
    r = resid(mu)
    norm = float(np.max(np.abs(r)))
    omega = 0.5
    it = 0
    method = "fixed-point"
    while norm > tol and it < max_iter:
        it += 1
        trial = mu + omega * r
        if _inside(trial, lam_c):
            r_trial = resid(trial)
            n_trial = float(np.max(np.abs(r_trial)))
            if n_trial < norm:
                mu, r, norm = trial, r_trial, n_trial
                omega = min(1.0, 1.5 * omega)
                continue
        omega *= 0.5
        if omega < 1e-8:
            break
    if norm > tol:
        method = "root"
        sol = root(resid, mu, method="hybr", tol=1e-14)
        if sol.success and _inside(sol.x, lam_c):
            mu = _project(sol.x)
            norm = float(np.max(np.abs(resid(mu))))
    if not norm <= tol:
        raise SolverError("t-compatible fixed point did not converge", trace=[norm], detail={"t": t})
    head = [0.25] * partition.d_beta + [-0.25] * partition.d_gamma
    weights = WeightVector(head + list(lam_c + mu))
    return TCompatibleResult(weights, mu, norm, it, method)


def weight_drift_table(t_list, surface, partition, psi, c_interp, **options):
    """Rows ``(t, ||lambda(t) - lambda_inf||_inf, drift * log t)``."""
    center = np.array([float(v) for v in barycenter(surface, partition)])
    rows = []
    for t in t_list:
        res = solve_t_compatible(t, surface, partition, psi, c_interp, **options)
        drift = float(np.max(np.abs(np.asarray(res.weights.values, dtype=float) - center)))
        rows.append((float(t), drift, drift * math.log(t)))
    return rows


def self_map_radius(t, surface, partition, psi, c_interp, radii, n_samples=64, seed=0):
    """Largest radius among ``radii`` whose sampled sphere ``F_t`` maps into the ball.

    Sampling covers random directions in ``{sum mu = 0}``; a radius is
    accepted only if the sphere stays inside the open face and every sampled
    image has norm at most the radius.  Returns 0 when none is verified.
    """
    lam_c = float(_center_value(surface, partition))
    d_r = partition.d_r
    if d_r < 2:
        return float(max(radii))
    rng = np.random.default_rng(seed)
    dirs = np.array([_project(v) for v in rng.standard_normal((n_samples, d_r))])
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    best = 0.0
    for rad in sorted(radii):
        pts = rad * dirs
        if not all(_inside(p, lam_c) for p in pts):
            break
        try:
            imgs = [fixed_point_map(p, t, lam_c, psi, c_interp) for p in pts]
        except DomainError:
            break
        if max(np.linalg.norm(v) for v in imgs) <= rad:
            best = float(rad)
    return best
