"""Classical and Minimum Covariance Determinant scatter, and whitening."""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .distcorr import as_sample
from .exceptions import ConditioningError, DimensionError, ExactFitError, ValidationError

# relative eigenvalue floor below which a subset scatter counts as singular
_SINGULAR_RATIO = 1e-12
# whitening refuses scatters with smallest/largest eigenvalue below this
WHITEN_RATIO = 1e-10


@dataclass
class RobustCovResult:
    """Outcome of :func:`fast_mcd`.

    ``scatter`` is the raw h-subset covariance multiplied by
    ``consistency_factor``. ``cstep_trace`` holds, for every finalist, the
    sequence of subset determinants visited by its concentration steps.
    """

    location: np.ndarray
    scatter: np.ndarray
    subset: np.ndarray
    raw_determinant: float
    consistency_factor: float
    raw_scatter: np.ndarray
    h: int
    cstep_trace: list = field(default_factory=list)
    raw_location: np.ndarray | None = None
    reweighted: bool = False
    weights: np.ndarray | None = None


@dataclass
class WhitenedData:
    z: np.ndarray
    whitening_matrix: np.ndarray
    center: np.ndarray


def sample_covariance(x):
    """Unbiased covariance matrix of the rows of `x` (denominator n - 1)."""
    x = as_sample(x)
    if x.shape[0] < 2:
        raise DimensionError("need at least two observations")
    c = x - x.mean(axis=0)
    cov = c.T @ c / (x.shape[0] - 1)
    return 0.5 * (cov + cov.T)


def mcd_consistency_factor(h, n, d):
    """Factor making the raw h-subset covariance consistent at the normal."""
    alpha = h / n
    if alpha >= 1.0:
        return 1.0
    return alpha / chi2.cdf(chi2.ppf(alpha, d), d + 2)


def _fit_subsets(x, idx):
    # idx: (S, m) row indices -> means (S, d), covs (S, d, d) with m-1 denominator
    pts = x[idx]
    mu = pts.mean(axis=1)
    c = pts - mu[:, None, :]
    cov = np.einsum("smi,smj->sij", c, c) / (idx.shape[1] - 1)
    return mu, cov


def _nonsingular(cov):
    ev = np.linalg.eigvalsh(cov)
    return (ev[:, 0] > _SINGULAR_RATIO * np.abs(ev[:, -1])) & (ev[:, -1] > 0)


def _csteps(x, mu, cov, h, steps):
    """Run `steps` concentration steps on a batch of candidates.

    Returns the new subsets, fits, and log-determinants per step, shape
    (steps + 1, S) with the starting determinant first.
    """
    logdets = [np.linalg.slogdet(cov)[1]]
    subsets = None
    for _ in range(steps):
        inv = np.linalg.inv(cov)
        diff = x[None, :, :] - mu[:, None, :]
        md2 = np.einsum("sni,sij,snj->sn", diff, inv, diff)
        subsets = np.sort(np.argpartition(md2, h - 1, axis=1)[:, :h], axis=1)
        mu, cov = _fit_subsets(x, subsets)
        logdets.append(np.linalg.slogdet(cov)[1])
    return subsets, mu, cov, np.array(logdets)


def fast_mcd(
    x,
    h_fraction=0.75,
    seed=0,
    n_starts=500,
    n_initial_csteps=2,
    n_finalists=10,
    max_csteps=100,
    tol=1e-9,
    reweight=True,
    reweight_level=0.975,
):
    """Minimum Covariance Determinant estimate by the FastMCD search.

    Random (d+1)-point elemental subsets are improved by a few
    concentration steps (refit on the h points with the smallest Mahalanobis
    distance). The best `n_finalists` are iterated until the relative change
    of the determinant drops below `tol` or `max_csteps` is reached.

    Parameters
    ----------
    x : array_like, shape (n, d)
    h_fraction : float
        Subset size ``h = floor(h_fraction * n)``. The default 0.75 gives a
        25% breakdown value.
    seed : int or numpy Generator
        Drives the choice of elemental subsets; the result is a deterministic
        function of (x, parameters, seed).
    reweight : bool
        Refit location and scatter on the points whose robust distance is
        within the `reweight_level` chi-square quantile. Without this step the
        h-subset scatter of non-elliptical data is generally not proportional
        to its covariance.

    Returns
    -------
    RobustCovResult
    """
    x = as_sample(x)
    n, d = x.shape
    if n < 2 * (d + 1):
        raise DimensionError(f"MCD needs n >= 2(d+1) = {2 * (d + 1)}, got n = {n}")
    if not 0.5 <= h_fraction <= 1.0:
        raise ValidationError(f"h_fraction must lie in [0.5, 1], got {h_fraction}")
    h = int(np.floor(h_fraction * n))
    h = max(h, (n + 1) // 2)
    if h < d + 1:
        raise DimensionError(f"subset size h = {h} is smaller than d + 1")
    rng = np.random.default_rng(seed)

    if h == n:
        starts = np.arange(n)[None, :]
    else:
        starts = np.array([rng.choice(n, d + 1, replace=False) for _ in range(n_starts)])
    mu, cov = _fit_subsets(x, starts)
    ok = _nonsingular(cov)
    if not ok.any():
        raise ExactFitError("all elemental subsets have a singular scatter matrix")
    start_ids = np.flatnonzero(ok)
    mu, cov = mu[ok], cov[ok]

    subsets, mu, cov, _ = _csteps(x, mu, cov, h, max(n_initial_csteps, 1))
    ok = _nonsingular(cov)
    if not ok.any():
        raise ExactFitError("every concentrated subset has a singular scatter matrix")
    start_ids, subsets, mu, cov = start_ids[ok], subsets[ok], mu[ok], cov[ok]

    logdet = np.linalg.slogdet(cov)[1]
    # lexsort: primary key log-determinant, ties to the lowest start index
    order = np.lexsort((start_ids, logdet))[:n_finalists]

    best = None
    traces = []
    for s in order:
        m, c, sub = mu[s : s + 1], cov[s : s + 1], subsets[s]
        trace = [float(np.exp(np.linalg.slogdet(c[0])[1]))]
        for _ in range(max_csteps):
            new_sub, m, c, lds = _csteps(x, m, c, h, 1)
            sub = new_sub[0]
            det = float(np.exp(lds[-1, 0]))
            prev = trace[-1]
            trace.append(det)
            if not np.isfinite(lds[-1, 0]) or abs(prev - det) <= tol * max(abs(prev), 1e-300):
                break
        traces.append(trace)
        key = (trace[-1], int(start_ids[s]))
        if best is None or key < best[0]:
            best = (key, m[0].copy(), c[0].copy(), sub.copy())

    (raw_det, _), location, raw_scatter, subset = best
    if not _nonsingular(raw_scatter[None])[0]:
        raise ExactFitError("the optimal h-subset has a singular scatter matrix")
    factor = float(mcd_consistency_factor(h, n, d))
    result = RobustCovResult(
        location=location,
        scatter=factor * raw_scatter,
        subset=subset,
        raw_determinant=raw_det,
        consistency_factor=factor,
        raw_scatter=raw_scatter,
        h=h,
        cstep_trace=traces,
        raw_location=location,
    )
    if reweight:
        _reweight(x, result, reweight_level)
    return result


def _reweight(x, result, level):
    n, d = x.shape
    diff = x - result.location
    md2 = np.einsum("ni,ij,nj->n", diff, np.linalg.inv(result.scatter), diff)
    keep = md2 <= chi2.ppf(level, d)
    if keep.sum() <= d:
        return
    pts = x[keep]
    loc = pts.mean(axis=0)
    cov = sample_covariance(pts)
    if not _nonsingular(cov[None])[0]:
        return
    result.location = loc
    result.scatter = cov / chi2.cdf(chi2.ppf(level, d), d + 2) * level
    result.reweighted = True
    result.weights = keep


def inverse_sqrt(scatter, ratio=WHITEN_RATIO):
    """Symmetric inverse square root of an SPD matrix via its eigendecomposition."""
    s = np.asarray(scatter, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"scatter must be square, got shape {s.shape}")
    s = 0.5 * (s + s.T)
    ev, vec = np.linalg.eigh(s)
    if not ev[-1] > 0 or ev[0] <= ratio * ev[-1]:
        r = ev[0] / ev[-1] if ev[-1] > 0 else float("nan")
        raise ConditioningError(
            f"scatter is near singular: smallest/largest eigenvalue ratio {r:.3e} "
            f"(need > {ratio:.0e})"
        )
    w = (vec / np.sqrt(ev)) @ vec.T
    return 0.5 * (w + w.T)


def whiten(x, scatter, center=None):
    """Whiten `x` as ``z = (x - center) W`` with ``W = scatter^(-1/2)``.

    `center` defaults to the column means.
    """
    x = as_sample(x)
    if center is None:
        center = x.mean(axis=0)
    center = np.asarray(center, dtype=float)
    w = inverse_sqrt(scatter)
    return WhitenedData(z=(x - center) @ w, whitening_matrix=w, center=center)


def classical_whiten(x):
    x = as_sample(x)
    return whiten(x, sample_covariance(x), x.mean(axis=0))


def mcd_whiten(x, h_fraction=0.75, seed=0, **mcd_kwargs):
    """Whiten with the MCD location and scatter; returns (WhitenedData, RobustCovResult)."""
    mcd = fast_mcd(x, h_fraction=h_fraction, seed=seed, **mcd_kwargs)
    return whiten(x, mcd.scatter, mcd.location), mcd
