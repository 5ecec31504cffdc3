"""Redescending transforms applied before measuring dependence.

The bowl transform maps ``R^p -> R^(p+1)``::

    u(x)  = tanh(|x| / q)
    v1(x) = 10 u^2 (1 - u)^2 x
    v2(x) = 10 u^6 (1 - u)^2

with ``q = sqrt(chi2.ppf(0.9975, p))``. It is bounded, continuous, one to
one and sends far points back towards the origin. The biloop transform is
its univariate relative ``R -> R^2``.
"""

from functools import lru_cache

import numpy as np
from scipy.special import gammaincinv

from .distcorr import as_sample, dcor_n
from .exceptions import DegenerateScaleError, ValidationError

BOWL_LEVEL = 0.9975
BILOOP_C = 4.0
MAD_NORMAL_FACTOR = 1.482602218505602


@lru_cache(maxsize=None)
def chi2_quantile(prob, df):
    """Quantile of the chi-square distribution with `df` degrees of freedom.

    Inverts the regularized lower incomplete gamma function: the chi-square
    cdf at ``x`` is ``P(df/2, x/2)``.
    """
    prob = float(prob)
    if not 0.0 < prob < 1.0:
        raise ValidationError(f"prob must lie in (0, 1), got {prob}")
    if int(df) != df or df < 1:
        raise ValidationError(f"df must be a positive integer, got {df}")
    return float(2.0 * gammaincinv(0.5 * df, prob))


def bowl_scale(p):
    """Default scaling constant ``q`` for `p`-dimensional input."""
    return float(np.sqrt(chi2_quantile(BOWL_LEVEL, int(p))))


def bowl(x, q=None):
    """Bowl transform of a vector or of each row of a matrix.

    Parameters
    ----------
    x : array_like, shape (p,) or (n, p)
    q : float, optional
        Scaling constant; defaults to :func:`bowl_scale` of the input
        dimension.

    Returns
    -------
    ndarray, shape (p + 1,) or (n, p + 1)
        ``(v1(x), v2(x))``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValidationError("bowl input contains non-finite entries")
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if q is None:
        q = bowl_scale(rows.shape[1])
    if q <= 0:
        raise ValidationError(f"q must be positive, got {q}")
    u = np.tanh(np.linalg.norm(rows, axis=1) / q)
    w = 10.0 * (1.0 - u) ** 2
    v1 = (w * u**2)[:, None] * rows
    v2 = w * u**6
    out = np.column_stack([v1, v2])
    return out[0] if single else out


def biloop(x, c=BILOOP_C):
    """Biloop transform ``x -> (u(x), v(x))``, elementwise.

    Returns a tuple ``(u, v)`` of arrays with the shape of `x` (floats for
    scalar input).
    """
    if c <= 0:
        raise ValidationError(f"c must be positive, got {c}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValidationError("biloop input contains non-finite entries")
    t = 2.0 * np.pi * np.tanh(x / c)
    u = np.where(x >= 0, c * (1.0 + np.cos(t + np.pi)), -c * (1.0 + np.cos(t - np.pi)))
    v = np.sin(t)
    if u.ndim == 0:
        return float(u), float(v)
    return u, v


def robust_standardize(column, scaled=False):
    """Center at the median and divide by the median absolute deviation.

    With ``scaled=True`` the MAD is multiplied by 1.4826 so it estimates the
    standard deviation at the normal model.
    """
    col = np.asarray(column, dtype=float).ravel()
    med = np.median(col)
    mad = np.median(np.abs(col - med))
    if scaled:
        mad *= MAD_NORMAL_FACTOR
    if not mad > 0:
        raise DegenerateScaleError("median absolute deviation is zero")
    return (col - med) / mad


def bowl_dcor_stats(x, y):
    """:class:`~rica.distcorr.DependenceStats` of the bowl-transformed pair."""
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    return dcor_n(bowl(x), bowl(y))


def bowl_dcor(x, y):
    """Distance correlation after applying :func:`bowl` row-wise to each input."""
    return bowl_dcor_stats(x, y).dcor


def biloop_features(x, c=BILOOP_C, standardize=True):
    """Robustly standardize each column, then biloop it into two columns."""
    x = as_sample(x)
    cols = []
    for j in range(x.shape[1]):
        col = robust_standardize(x[:, j]) if standardize else x[:, j]
        cols.extend(biloop(col, c))
    return np.column_stack(cols)


def biloop_dcor_stats(x, y, c=BILOOP_C):
    """Distance correlation of the biloop-transformed, standardized pair."""
    return dcor_n(biloop_features(x, c), biloop_features(y, c))
