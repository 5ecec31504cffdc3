"""Simulation apparatus: sources, contamination, mixing, Amari error, harness."""

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .distcorr import as_sample
from .exceptions import GenerationError, ValidationError
from .ica import RicaConfig, fit

# ---------------------------------------------------------------------------
# Source catalogue
#
# Eighteen benchmark densities labelled a-r in the usual kernel-ICA order.
# Gaussian mixtures are given as (weights, means, standard deviations).
# Every sampled column is standardized to zero mean and unit variance.


@dataclass(frozen=True)
class SourceSpec:
    key: str
    description: str
    family: str
    params: dict

    def sample(self, rng, n):
        """Draw `n` values and standardize them to mean 0, variance 1."""
        draw = _FAMILIES[self.family](rng, n, **self.params)
        return (draw - draw.mean()) / draw.std()


def _student(rng, n, df):
    return rng.standard_t(df, size=n)


def _laplace(rng, n):
    return rng.laplace(size=n)


def _uniform(rng, n):
    return rng.uniform(-1.0, 1.0, size=n)


def _exponential(rng, n):
    return rng.exponential(size=n)


def _laplace_mixture(rng, n, weights, locs, scales):
    comp = rng.choice(len(weights), size=n, p=np.asarray(weights) / np.sum(weights))
    return rng.laplace(np.asarray(locs)[comp], np.asarray(scales)[comp])


def _gauss_mixture(rng, n, weights, means, sds):
    comp = rng.choice(len(weights), size=n, p=np.asarray(weights) / np.sum(weights))
    return rng.normal(np.asarray(means)[comp], np.asarray(sds)[comp])


_FAMILIES = {
    "student": _student,
    "laplace": _laplace,
    "uniform": _uniform,
    "exponential": _exponential,
    "laplace_mixture": _laplace_mixture,
    "gauss_mixture": _gauss_mixture,
}


# equally spaced means of the four-component mixtures
_GRID4 = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0]


def _gm(weights, means, sds):
    return {"weights": list(weights), "means": list(means), "sds": list(sds)}


CATALOGUE = {
    s.key: s
    for s in [
        SourceSpec("a", "Student t, 3 degrees of freedom", "student", {"df": 3}),
        SourceSpec("b", "double exponential", "laplace", {}),
        SourceSpec("c", "uniform", "uniform", {}),
        SourceSpec("d", "Student t, 5 degrees of freedom", "student", {"df": 5}),
        SourceSpec("e", "exponential", "exponential", {}),
        SourceSpec(
            "f",
            "mixture of 2 double exponentials",
            "laplace_mixture",
            {"weights": [0.5, 0.5], "locs": [-1.0, 1.0], "scales": [0.25, 0.25]},
        ),
        SourceSpec("g", "symmetric mixture of 2 Gaussians, multimodal", "gauss_mixture",
                   _gm([0.5, 0.5], [-1, 1], [0.25, 0.25])),
        SourceSpec("h", "symmetric mixture of 2 Gaussians, transitional", "gauss_mixture",
                   _gm([0.5, 0.5], [-1, 1], [0.8, 0.8])),
        SourceSpec("i", "symmetric mixture of 2 Gaussians, unimodal", "gauss_mixture",
                   _gm([0.5, 0.5], [-1, 1], [1.0, 1.0])),
        SourceSpec("j", "nonsymmetric mixture of 2 Gaussians, multimodal", "gauss_mixture",
                   _gm([0.5, 0.5], [-1, 1], [0.2, 0.6])),
        SourceSpec("k", "nonsymmetric mixture of 2 Gaussians, transitional", "gauss_mixture",
                   _gm([0.75, 0.25], [0, 2], [0.6, 0.6])),
        SourceSpec("l", "nonsymmetric mixture of 2 Gaussians, unimodal", "gauss_mixture",
                   _gm([0.6, 0.4], [0, 1.5], [0.8, 1.2])),
        SourceSpec("m", "symmetric mixture of 4 Gaussians, multimodal", "gauss_mixture",
                   _gm([0.25] * 4, _GRID4, [0.16] * 4)),
        SourceSpec("n", "symmetric mixture of 4 Gaussians, transitional", "gauss_mixture",
                   _gm([0.25] * 4, _GRID4, [0.3] * 4)),
        SourceSpec("o", "symmetric mixture of 4 Gaussians, unimodal", "gauss_mixture",
                   _gm([0.25] * 4, _GRID4, [0.4] * 4)),
        SourceSpec("p", "nonsymmetric mixture of 4 Gaussians, multimodal", "gauss_mixture",
                   _gm([0.25] * 4, _GRID4, [0.16, 0.05, 0.1, 0.2])),
        SourceSpec("q", "nonsymmetric mixture of 4 Gaussians, transitional", "gauss_mixture",
                   _gm([0.3, 0.2, 0.2, 0.3], _GRID4, [0.3, 0.2, 0.35, 0.25])),
        SourceSpec("r", "nonsymmetric mixture of 4 Gaussians, unimodal", "gauss_mixture",
                   _gm([0.1, 0.4, 0.4, 0.1], _GRID4, [0.3, 0.4, 0.5, 0.3])),
    ]
}


def catalogue_records():
    """Catalogue as plain dicts, for manifests and audit."""
    return [asdict(spec) for spec in CATALOGUE.values()]


def sample_sources(keys, n, rng):
    """An (n, len(keys)) matrix with column j drawn from ``CATALOGUE[keys[j]]``."""
    try:
        specs = [CATALOGUE[k] for k in keys]
    except KeyError as exc:
        raise ValidationError(f"unknown distribution key {exc.args[0]!r}") from None
    return np.column_stack([spec.sample(rng, n) for spec in specs])


# ---------------------------------------------------------------------------
# Amari error and mixing matrices


def amari_error(p):
    """Amari discrepancy of `p` from a scaled permutation, in [0, 1].

    For each row (and each column) the absolute entries are divided by their
    maximum and summed, minus one; the total is divided by ``2 d (d - 1)``.
    """
    p = np.abs(np.asarray(p, dtype=float))
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 2:
        raise ValidationError(f"need a square matrix with d >= 2, got shape {p.shape}")
    row_max = p.max(axis=1)
    col_max = p.max(axis=0)
    if np.any(row_max == 0) or np.any(col_max == 0):
        raise ValidationError("matrix has an all-zero row or column")
    d = p.shape[0]
    rows = (p / row_max[:, None]).sum(axis=1) - 1.0
    cols = (p / col_max[None, :]).sum(axis=0) - 1.0
    return float((rows.sum() + cols.sum()) / (2.0 * d * (d - 1)))


def random_mixing_matrix(d, seed=None, max_cond=2.0, method="auto", max_draws=10**6):
    """Random d x d mixing matrix with condition number in [1, `max_cond`].

    ``method="rejection"`` redraws standard normal matrices until the
    condition number is small enough. That becomes hopeless beyond d = 5,
    so ``"auto"`` switches to ``"svd"`` there: Haar-random orthogonal
    factors around singular values drawn uniformly from [1, max_cond].
    """
    if d < 2:
        raise ValidationError(f"d must be at least 2, got {d}")
    rng = np.random.default_rng(seed)
    if method == "auto":
        method = "rejection" if d <= 5 else "svd"
    if method == "rejection":
        for _ in range(max_draws):
            a = rng.standard_normal((d, d))
            if np.linalg.cond(a) <= max_cond:
                return a
        raise GenerationError(f"no matrix with cond <= {max_cond} in {max_draws} draws")
    if method == "svd":
        from scipy.stats import ortho_group

        u = ortho_group.rvs(d, random_state=rng)
        v = ortho_group.rvs(d, random_state=rng)
        s = rng.uniform(1.0, max_cond, size=d)
        return (u * s) @ v.T
    raise ValidationError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Contamination


def _check_fraction(fraction):
    if not 0.0 <= fraction <= 0.5:
        raise ValidationError(f"fraction must lie in [0, 0.5], got {fraction}")


def _replaced_rows(rng, n, count):
    return np.sort(rng.choice(n, size=count, replace=False))


def contaminate_clustered(s, fraction=0.1, seed=None, center=15.0, scale=1.0):
    """Replace ``floor(fraction * n)`` rows by independent N(center, scale^2) draws.

    Returns ``(contaminated, rows)``.
    """
    _check_fraction(fraction)
    s = as_sample(s, "s")
    rng = np.random.default_rng(seed)
    n, d = s.shape
    rows = _replaced_rows(rng, n, int(np.floor(fraction * n)))
    out = s.copy()
    out[rows] = rng.normal(center, scale, size=(rows.size, d))
    return out, rows


def contaminate_multiplicative(s, fraction=0.1, seed=None, per_column=True):
    """Replace rows by scaled column extremes.

    For each replaced row a vector ``w`` of uniform [0, 1] draws is redrawn
    until ``sum(w) > 1``; entry j becomes ``w_j * d * e_j`` where ``e_j`` is
    the minimum or the maximum of column j of the clean matrix. The min/max
    coin is flipped for every entry, or once per row when `per_column` is
    False (outliers then sit only in the all-min or all-max orthant).

    Returns ``(contaminated, rows)``.
    """
    _check_fraction(fraction)
    s = as_sample(s, "s")
    rng = np.random.default_rng(seed)
    n, d = s.shape
    rows = _replaced_rows(rng, n, int(np.floor(fraction * n)))
    lo = s.min(axis=0)
    hi = s.max(axis=0)
    out = s.copy()
    for r in rows:
        w = rng.uniform(size=d)
        while w.sum() <= 1.0:
            w = rng.uniform(size=d)
        if per_column:
            use_max = rng.uniform(size=d) < 0.5
        else:
            use_max = np.full(d, rng.uniform() < 0.5)
        out[r] = w * d * np.where(use_max, hi, lo)
    return out, rows


def contaminate_increasing(s, count, seed=None, magnitude=5.0, max_fraction=0.2):
    """Set one random coordinate of `count` distinct rows to +/- `magnitude`.

    All random choices are drawn up front from the seed, so for a fixed seed
    the outliers at a smaller count are a subset of those at a larger count.

    Returns ``(contaminated, rows)``.
    """
    s = as_sample(s, "s")
    n, d = s.shape
    if count < 0 or count > max_fraction * n:
        raise ValidationError(f"count must lie in [0, {max_fraction} * n = {max_fraction * n}], got {count}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    coords = rng.integers(d, size=n)
    signs = np.where(rng.uniform(size=n) < 0.5, -magnitude, magnitude)
    out = s.copy()
    rows = order[:count]
    out[rows, coords[:count]] = signs[:count]
    return out, np.sort(rows)


CONTAMINATIONS = ("none", "clustered", "multiplicative", "increasing")


@dataclass(frozen=True)
class ContaminationSpec:
    """Which outliers a benchmark trial receives.

    Clustered and multiplicative outliers replace rows of the standardized
    source matrix before mixing. Increasing contamination replaces one
    coordinate of observed rows, so it is applied after mixing: a +/-5 on a
    source axis would only lengthen that source's tail.
    """

    kind: str = "none"
    fraction: float = 0.1
    count: int = 0
    per_column: bool = True

    def __post_init__(self):
        if self.kind not in CONTAMINATIONS:
            raise ValidationError(f"unknown contamination {self.kind!r}; choose from {CONTAMINATIONS}")
        _check_fraction(self.fraction)

    def apply(self, s, rng):
        if self.kind == "none":
            return s.copy()
        if self.kind == "clustered":
            return contaminate_clustered(s, self.fraction, rng)[0]
        if self.kind == "multiplicative":
            return contaminate_multiplicative(s, self.fraction, rng, self.per_column)[0]
        return contaminate_increasing(s, self.count, rng)[0]

    @property
    def on_observations(self):
        return self.kind == "increasing"

    @property
    def label(self):
        return f"increasing:{self.count}" if self.kind == "increasing" else self.kind


# ---------------------------------------------------------------------------
# Harness


@dataclass
class TrialResult:
    method: str
    distribution: str
    contamination: str
    d: int
    n: int
    seed: int
    amari: float
    runtime_seconds: float
    replication: int = 0
    error: str | None = None


RESULT_FIELDS = ["method", "distribution", "contamination", "d", "n", "seed", "amari", "runtime_seconds"]


@dataclass(frozen=True)
class _Task:
    dist_index: int
    replication: int
    keys: tuple
    seed: int


def trial_seed(master_seed, dist_index, replication):
    """Seed of one replication; depends only on its coordinates."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(dist_index, replication))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _run_task(task, methods, contamination, d, n, config):
    rng = np.random.default_rng(task.seed)
    s = sample_sources(task.keys, n, rng)
    if not contamination.on_observations:
        s = contamination.apply(s, rng)
    a = random_mixing_matrix(d, rng)
    x = s @ a.T
    if contamination.on_observations:
        x = contamination.apply(x, rng)
    label = task.keys[0] if len(set(task.keys)) == 1 else "+".join(task.keys)
    out = []
    for method in methods:
        t0 = time.perf_counter()
        try:
            res = fit(method, x, RicaConfig(**{**config, "seed": task.seed}))
            amari = amari_error(res.unmixing @ a)
            err = None
        except Exception as exc:  # a failed trial is recorded, never fatal
            amari = float("nan")
            err = f"{type(exc).__name__}: {exc}"
        out.append(
            TrialResult(
                method=method,
                distribution=label,
                contamination=contamination.label,
                d=d,
                n=n,
                seed=task.seed,
                amari=amari,
                runtime_seconds=time.perf_counter() - t0,
                replication=task.replication,
                error=err,
            )
        )
    return out


def run_benchmark(
    methods,
    distributions,
    contamination="none",
    d=2,
    n=1000,
    replications=10,
    seed=0,
    fraction=0.1,
    count=0,
    mixed_sources=False,
    config=None,
    n_jobs=1,
):
    """Run every method on freshly simulated, contaminated, mixed data.

    Parameters
    ----------
    methods : sequence of str
        Names accepted by :func:`rica.ica.fit` (``"rica"``, ``"dcovica"``).
    distributions : sequence of str
        Catalogue keys. Each replication of key ``k`` draws all ``d``
        sources from ``k``; with `mixed_sources` every column instead picks a
        key uniformly from `distributions` and one pass of `replications`
        is made.
    contamination : str or ContaminationSpec
    config : dict, optional
        Extra :class:`~rica.ica.RicaConfig` fields (the seed is overridden
        per trial).
    n_jobs : int
        Worker processes. Results do not depend on it.

    Returns
    -------
    list of TrialResult
        Ordered by (distribution, replication, method).
    """
    if isinstance(contamination, str):
        contamination = ContaminationSpec(contamination, fraction=fraction, count=count)
    methods = list(methods)
    distributions = list(distributions)
    for key in distributions:
        if key not in CATALOGUE:
            raise ValidationError(f"unknown distribution key {key!r}")
    config = dict(config or {})
    if replications < 0:
        raise ValidationError("replications must be >= 0")

    tasks = []
    if mixed_sources:
        for r in range(replications):
            ts = trial_seed(seed, 0, r)
            pick = np.random.default_rng([ts, 1]).integers(len(distributions), size=d)
            tasks.append(_Task(0, r, tuple(distributions[i] for i in pick), ts))
    else:
        for i, key in enumerate(distributions):
            for r in range(replications):
                tasks.append(_Task(i, r, (key,) * d, trial_seed(seed, i, r)))

    args = (methods, contamination, d, n, config)
    if n_jobs == 1 or len(tasks) <= 1:
        chunks = [_run_task(t, *args) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_run_task, t, *args) for t in tasks]
            chunks = [f.result() for f in futures]
    return [res for chunk in chunks for res in chunk]


def summarize(results):
    """Mean Amari error per (distribution, method), plus an overall mean row.

    Returns ``(rows, methods)`` with rows as ``(label, {method: mean})``.
    """
    methods = list(dict.fromkeys(r.method for r in results))
    dists = list(dict.fromkeys(r.distribution for r in results))
    rows = []
    for dist in dists:
        rows.append((dist, {m: _mean(results, m, dist) for m in methods}))
    if dists:
        rows.append(("mean", {m: float(np.nanmean([row[1][m] for row in rows])) for m in methods}))
    return rows, methods


def _mean(results, method, dist):
    vals = [r.amari for r in results if r.method == method and r.distribution == dist and r.error is None]
    return float(np.mean(vals)) if vals else float("nan")


def format_summary(results, title=None):
    """Table of mean Amari error x 100, one row per distribution."""
    rows, methods = summarize(results)
    lines = []
    if title:
        lines.append(title)
    lines.append("Amari error (x 100)")
    lines.append(" " * 8 + "".join(f"{m:>12}" for m in methods))
    for label, means in rows:
        lines.append(f"{label:<8}" + "".join(f"{100 * means[m]:>12.2f}" for m in methods))
    return "\n".join(lines) + "\n"


def write_results_csv(results, path, timing=True):
    """Write one row per trial; without `timing` the runtime column holds ``nan``.

    Runtimes are the only non-reproducible field, so leaving them out makes
    the file a deterministic function of the run configuration.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_FIELDS)
        for r in results:
            writer.writerow([
                r.method, r.distribution, r.contamination, r.d, r.n, r.seed,
                repr(float(r.amari)), f"{r.runtime_seconds:.6f}" if timing else "nan",
            ])


def read_results_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        TrialResult(
            method=row["method"],
            distribution=row["distribution"],
            contamination=row["contamination"],
            d=int(row["d"]),
            n=int(row["n"]),
            seed=int(row["seed"]),
            amari=float(row["amari"]),
            runtime_seconds=float(row["runtime_seconds"]),
        )
        for row in rows
    ]


def write_manifest(path, manifest):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def format_failures(results):
    return [f"{r.method}/{r.distribution}/rep {r.replication}: {r.error}" for r in results if r.error]


__all__ = [
    "CATALOGUE",
    "CONTAMINATIONS",
    "catalogue_records",
    "sample_sources",
    "trial_seed",
    "read_results_csv",
    "format_failures",
    "SourceSpec",
    "ContaminationSpec",
    "TrialResult",
    "amari_error",
    "random_mixing_matrix",
    "contaminate_clustered",
    "contaminate_multiplicative",
    "contaminate_increasing",
    "run_benchmark",
    "summarize",
    "format_summary",
    "write_results_csv",
    "write_manifest",
]
