"""Least-squares line fits used by the decay and drift diagnostics."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from .errors import DomainError

__all__ = ["LineFit", "linear_fit"]


@dataclass(frozen=True)
class LineFit:
    """Slope, intercept and coefficient of determination of a line fit."""

    slope: float
    intercept: float
    r2: float

    def __iter__(self):
        return iter((self.slope, self.intercept, self.r2))


def linear_fit(x, y):
    """Fit ``y = slope * x + intercept`` by ordinary least squares.

    Parameters
    ----------
    x, y : array_like
        At least two finite samples each.

    Returns
    -------
    LineFit
        ``r2`` is 1 for exact data and for constant y.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise DomainError("line fit needs two matching arrays of length >= 2")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("line fit needs finite samples")
    if np.ptp(y) == 0:
        return LineFit(0.0, float(y[0]), 1.0)
    res = linregress(x, y)
    return LineFit(float(res.slope), float(res.intercept), float(res.rvalue**2))
