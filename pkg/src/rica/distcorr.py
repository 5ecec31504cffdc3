"""Empirical distance covariance, variance and correlation.

The estimator is built from pairwise Euclidean distance matrices
``a_ij = |x_i - x_j|`` and ``b_ij = |y_i - y_j|`` as three averages:

* ``T1``: mean over pairs of ``a_ij * b_ij``;
* ``T2``: (mean over pairs of ``a_ij``) * (mean over pairs of ``b_ij``);
* ``T3``: twice the mean over ordered distinct triples ``(i, j, k)`` of
  ``a_ij * b_ik``, i.e. the six-term sum over ``i < j < k`` divided by
  ``3 * C(n, 3)``.

``dcov = T1 + T2 - T3`` then estimates
``E|X-X'||Y-Y'| + E|X-X'| E|Y-Y'| - 2 E|X-X'||Y-Y''|``.

:func:`dcov_n` uses an O(n^2) evaluation of ``T3``;
:func:`dcov_n_bruteforce` sums the triples literally and is kept as the
reference for tests.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .exceptions import DimensionError, ValidationError

#: dVar values below this (after clamping at zero) mark a constant sample.
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class DependenceStats:
    """Distance dependence statistics of a pair of samples.

    ``dcov``, ``dvar_x``, ``dvar_y`` and ``dcor`` are clamped to their
    admissible ranges; the ``raw_*`` fields keep the unclamped estimator
    values.
    """

    dcov: float
    dvar_x: float
    dvar_y: float
    dcor: float
    degenerate_x: bool
    degenerate_y: bool
    raw_dcov: float
    raw_dvar_x: float
    raw_dvar_y: float

    @property
    def dstd_x(self):
        return float(np.sqrt(self.dvar_x))

    @property
    def dstd_y(self):
        return float(np.sqrt(self.dvar_y))

    def as_dict(self):
        return {
            "dcov": self.dcov,
            "dvar_x": self.dvar_x,
            "dvar_y": self.dvar_y,
            "dcor": self.dcor,
            "degenerate_x": self.degenerate_x,
            "degenerate_y": self.degenerate_y,
            "raw_dcov": self.raw_dcov,
            "raw_dvar_x": self.raw_dvar_x,
            "raw_dvar_y": self.raw_dvar_y,
        }


def as_sample(x, name="x"):
    """Return `x` as a finite float array of shape (n, p).

    One-dimensional input is treated as a single column.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def _check_pair(x, y):
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    if x.shape[0] != y.shape[0]:
        raise DimensionError(
            f"x and y need the same number of rows ({x.shape[0]} != {y.shape[0]})"
        )
    if x.shape[0] < 3:
        raise DimensionError(f"need n >= 3 observations, got {x.shape[0]}")
    return x, y


def distance_matrix(x):
    """Full (n, n) matrix of Euclidean distances between the rows of `x`."""
    return squareform(pdist(as_sample(x)))


def _cross_terms(a, b, ra, rb):
    # a, b: distance matrices with zero diagonal; ra, rb: their row sums.
    n = a.shape[0]
    pairs = n * (n - 1)
    sab = np.vdot(a, b)
    t1 = sab / pairs
    t2 = (ra.sum() / pairs) * (rb.sum() / pairs)
    # sum over ordered distinct triples of a_ij b_ik
    t3 = 2.0 * (ra @ rb - sab) / (pairs * (n - 2))
    return t1 + t2 - t3


def dcov_from_distances(a, b):
    """Raw estimator value from two precomputed distance matrices."""
    return float(_cross_terms(a, b, a.sum(axis=1), b.sum(axis=1)))


def dcov_n(x, y):
    """Empirical distance covariance ``T1 + T2 - T3`` (unclamped).

    Parameters
    ----------
    x : array_like, shape (n,) or (n, p)
    y : array_like, shape (n,) or (n, q)

    Returns
    -------
    float
        The raw statistic. It can be marginally negative for nearly
        independent samples; :func:`dcor_n` clamps it.
    """
    x, y = _check_pair(x, y)
    return dcov_from_distances(distance_matrix(x), distance_matrix(y))


def dvar_n(x):
    """Empirical distance variance, ``dcov_n(x, x)``."""
    x = as_sample(x)
    return dcov_n(x, x)


def dcor_n(x, y, tol=DEGENERACY_TOL):
    """Distance correlation with the variance and covariance terms.

    A sample whose distance variance falls below `tol` is flagged as
    degenerate and the correlation is reported as 0.

    Returns
    -------
    DependenceStats
    """
    x, y = _check_pair(x, y)
    a = distance_matrix(x)
    b = distance_matrix(y)
    ra = a.sum(axis=1)
    rb = b.sum(axis=1)
    raw_xy = float(_cross_terms(a, b, ra, rb))
    raw_xx = float(_cross_terms(a, a, ra, ra))
    raw_yy = float(_cross_terms(b, b, rb, rb))
    return _assemble(raw_xy, raw_xx, raw_yy, tol)


def _assemble(raw_xy, raw_xx, raw_yy, tol=DEGENERACY_TOL):
    dcov = max(raw_xy, 0.0)
    dvar_x = max(raw_xx, 0.0)
    dvar_y = max(raw_yy, 0.0)
    degenerate_x = dvar_x < tol
    degenerate_y = dvar_y < tol
    if degenerate_x or degenerate_y:
        dcor = 0.0
    else:
        dcor = min(dcov / np.sqrt(dvar_x * dvar_y), 1.0)
    return DependenceStats(
        dcov=dcov,
        dvar_x=dvar_x,
        dvar_y=dvar_y,
        dcor=float(dcor),
        degenerate_x=bool(degenerate_x),
        degenerate_y=bool(degenerate_y),
        raw_dcov=raw_xy,
        raw_dvar_x=raw_xx,
        raw_dvar_y=raw_yy,
    )


def dcor(x, y):
    """Shortcut returning only the distance correlation value."""
    return dcor_n(x, y).dcor


def dcov_terms_bruteforce(x, y):
    """``(T1, T2, T3)`` by literal summation over pairs and triples.

    O(n^3); meant for checking :func:`dcov_n` on small samples.
    """
    x, y = _check_pair(x, y)
    n = x.shape[0]

    def dist(m, i, j):
        return np.sqrt(np.sum((m[i] - m[j]) ** 2, axis=-1))

    i, j = np.array(list(combinations(range(n), 2))).T
    ax = dist(x, i, j)
    by = dist(y, i, j)
    t1 = np.sum(ax * by) / comb(n, 2)
    t2 = (np.sum(ax) / comb(n, 2)) * (np.sum(by) / comb(n, 2))

    i, j, k = np.array(list(combinations(range(n), 3))).T
    x_ij, x_ik, x_jk = dist(x, i, j), dist(x, i, k), dist(x, j, k)
    y_ij, y_ik, y_jk = dist(y, i, j), dist(y, i, k), dist(y, j, k)
    six = (
        x_ij * y_ik
        + x_ik * y_ij
        + x_ij * y_jk
        + x_jk * y_ij
        + x_ik * y_jk
        + x_jk * y_ik
    )
    t3 = np.sum(six) / (3 * comb(n, 3))
    return float(t1), float(t2), float(t3)


def dcov_n_bruteforce(x, y):
    """Reference value of :func:`dcov_n` from literal pair and triple sums."""
    t1, t2, t3 = dcov_terms_bruteforce(x, y)
    return t1 + t2 - t3
