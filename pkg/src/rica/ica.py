"""RICA and the dCovICA baseline.

Both estimators whiten the data, then search for an orthogonal separating
matrix ``U`` so that the sources ``S = Z U^T`` are as independent as
possible, measured by

    sum_k  dep(S[:, k], S[:, k+1:])      k = 0 .. d-2.

RICA uses MCD whitening and the distance correlation of bowl-transformed
columns as ``dep``; dCovICA uses classical whitening and the raw distance
covariance. ``U`` is parametrized by Givens angles and the angle blocks are
estimated one at a time: block ``k`` fixes row ``k`` of ``U`` and only the
``k``-th term depends on it once earlier blocks are fixed. Sweeps permute
the recovered sources and repeat the whole sequence, keeping the result only
when the full objective improves.

Matrix orientation: rows of ``x`` are observations and

    sources = (x - center) @ unmixing.T,   unmixing = separating @ whitening_matrix,

so ``unmixing`` maps a column observation to a column of sources, and
``unmixing @ A`` is close to a scaled permutation for a mixing matrix ``A``
with ``x = s @ A.T``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .distcorr import as_sample, dcov_n
from .exceptions import DimensionError, ValidationError
from .optimizer import OptProblem, lattice_starts, multistart_minimize
from .robustcov import classical_whiten, mcd_whiten
from .rotation import AngleVector, angle_bounds, block_matrix, compose, partial_product
from .transforms import bowl_dcor_stats


@dataclass
class RicaConfig:
    """Settings shared by :func:`rica_fit` and :func:`dcovica_fit`.

    ``sweeps=None`` means ``d + 1`` for RICA and 0 for dCovICA.
    """

    sweeps: int | None = None
    use_mcd_whitening: bool = True
    seed: int = 0
    h_fraction: float = 0.75
    starts_per_angle: int = 4
    max_starts: int = 16
    n_local: int = 2
    evals_per_angle: int = 100
    radius_init: float = 0.5
    radius_final: float = 1e-4

    def __post_init__(self):
        if self.sweeps is not None and self.sweeps < 0:
            raise ValidationError(f"sweeps must be >= 0, got {self.sweeps}")
        if self.n_local < 1:
            raise ValidationError("n_local must be at least 1")


@dataclass
class UnmixResult:
    unmixing: np.ndarray
    separating: np.ndarray
    whitening_matrix: np.ndarray
    center: np.ndarray
    sources: np.ndarray
    objective: float
    objective_trace: list
    angles: AngleVector
    method: str
    diagnostics: dict = field(default_factory=dict)


# Dependence measures: (x, y) -> (signed score, reported value, degenerate flag).
# The reported value is the clamped statistic. The search runs on the
# unclamped ratio raw_dcov / sqrt(dvar_x dvar_y), which keeps ranking
# rotations where the clamped value is flat at zero; clipping it to [0, 1]
# gives the reported value, so both orderings agree wherever it is positive.


def _signed(st):
    if st.degenerate_x or st.degenerate_y:
        return 0.0
    return st.raw_dcov / np.sqrt(st.dvar_x * st.dvar_y)


def _bowl_term(x, y):
    st = bowl_dcor_stats(x, y)
    return _signed(st), st.dcor, st.degenerate_x or st.degenerate_y


def _dcov_term(x, y):
    raw = dcov_n(x, y)
    return raw, max(raw, 0.0), False


MEASURES = {"bowl_dcor": _bowl_term, "dcov": _dcov_term}


def _measure(name):
    try:
        return MEASURES[name]
    except KeyError:
        raise ValidationError(f"unknown dependence measure {name!r}") from None


def _terms(s, term):
    return [term(s[:, k : k + 1], s[:, k + 1 :]) for k in range(s.shape[1] - 1)]


def sources_objective(s, measure="bowl_dcor"):
    """Full objective of a source matrix and the number of degenerate terms."""
    terms = _terms(s, _measure(measure))
    return float(sum(t[1] for t in terms)), int(sum(t[2] for t in terms))


def _ranking_key(s, term):
    # (reported objective, signed objective, degenerate count)
    terms = _terms(s, term)
    return float(sum(t[1] for t in terms)), float(sum(t[0] for t in terms)), int(sum(t[2] for t in terms))


def rica_objective(angles, z, measure="bowl_dcor"):
    """Objective at the angles: the sum over k of dep(S_k, S_{k+1..d})."""
    z = as_sample(z, "z")
    return sources_objective(z @ compose(angles).T, measure)[0]


def _optimize_block(w, k, config, term):
    """Minimize the k-th term over the angles of block k.

    `w` already carries the rotations of blocks ``0..k-1``.
    """
    d = w.shape[1]
    lower, upper = angle_bounds(d, k)

    def evaluate(block_angles):
        s = w @ block_matrix(d, k, block_angles).T
        return term(s[:, k : k + 1], s[:, k + 1 :])

    def objective(block_angles):
        return evaluate(block_angles)[0]

    lattice = lattice_starts(lower, upper, config.starts_per_angle, config.max_starts)
    lattice_values = np.array([objective(p) for p in lattice])
    order = np.argsort(lattice_values, kind="stable")[: config.n_local]
    problem = OptProblem(
        objective,
        lower,
        upper,
        lattice[order[0]],
        max_evals=config.evals_per_angle * (d - 1 - k),
        radius_init=config.radius_init,
        radius_final=config.radius_final,
    )
    res = multistart_minimize(problem, [lattice[i] for i in order])
    info = {
        "block": k,
        "initial_value": float(evaluate(lattice[order[0]])[1]),
        "value": float(evaluate(res.minimizer)[1]),
        "signed_value": float(res.objective_value),
        "evaluations": int(res.evaluations + len(lattice)),
        "converged_by": res.converged_by,
        "box_violations": res.box_violations,
    }
    return res.minimizer, info


def rica_stage(z, k, fixed_angles=None, config=None, measure="bowl_dcor"):
    """Estimate angle block `k` with blocks ``0..k-1`` held at `fixed_angles`.

    Returns
    -------
    block : ndarray, shape (d - 1 - k,)
    info : dict
        Best start value, optimized value and evaluation count.
    """
    z = as_sample(z, "z")
    d = z.shape[1]
    if not 0 <= k < d - 1:
        raise ValidationError(f"block index must lie in [0, {d - 2}], got {k}")
    config = config or RicaConfig()
    fixed_angles = fixed_angles or AngleVector.zeros(d)
    w = z if k == 0 else z @ partial_product(fixed_angles, k - 1).T
    return _optimize_block(w, k, config, _measure(measure))


def _estimate(z, config, measure):
    d = z.shape[1]
    term = _measure(measure)
    angles = AngleVector.zeros(d)
    w = z
    infos = []
    for k in range(d - 1):
        block, info = _optimize_block(w, k, config, term)
        angles = angles.with_block(k, block)
        w = w @ block_matrix(d, k, block).T
        infos.append(info)
    return angles, compose(angles), infos


def _check_data(x):
    x = as_sample(x)
    n, d = x.shape
    if d < 2:
        raise DimensionError("need at least two columns to unmix")
    if n < 2 * (d + 1):
        raise DimensionError(f"need n >= 2(d+1) = {2 * (d + 1)} observations, got {n}")
    return x


def _fit(x, config, measure, robust, sweeps, method):
    x = _check_data(x)
    n, d = x.shape
    mcd_seed, sweep_seed = np.random.SeedSequence(config.seed).spawn(2)
    if robust:
        white, mcd = mcd_whiten(x, h_fraction=config.h_fraction, seed=np.random.default_rng(mcd_seed))
        whitening = {"kind": "mcd", "consistency_factor": mcd.consistency_factor, "h": mcd.h}
    else:
        white = classical_whiten(x)
        whitening = {"kind": "classical"}
    z = white.z
    rng = np.random.default_rng(sweep_seed)

    angles, u, stages = _estimate(z, config, measure)
    best_u = u
    best_angles = angles
    term = _measure(measure)
    best_key = _ranking_key(z @ u.T, term)
    trace = [best_key[0]]
    accepted = [True]
    for stage in stages:
        stage["sweep"] = 0

    for sweep in range(1, sweeps + 1):
        perm = rng.permutation(d)
        pmat = np.eye(d)[perm]
        s_perm = (z @ best_u.T)[:, perm]
        angles, u, infos = _estimate(s_perm, config, measure)
        cand = u @ pmat @ best_u
        key = _ranking_key(z @ cand.T, term)
        trace.append(key[0])
        keep = key[:2] < best_key[:2]
        accepted.append(bool(keep))
        for info in infos:
            info["sweep"] = sweep
        stages.extend(infos)
        if keep:
            best_key, best_u, best_angles = key, cand, angles

    unmixing = best_u @ white.whitening_matrix
    return UnmixResult(
        unmixing=unmixing,
        separating=best_u,
        whitening_matrix=white.whitening_matrix,
        center=white.center,
        sources=z @ best_u.T,
        objective=best_key[0],
        objective_trace=[float(v) for v in trace],
        angles=best_angles,
        method=method,
        diagnostics={
            "whitening": whitening,
            "sweeps": sweeps,
            "accepted": accepted,
            "stages": stages,
            "signed_objective": best_key[1],
            "degenerate_terms": best_key[2],
            "evaluations": int(sum(st["evaluations"] for st in stages)),
        },
    )


def rica_fit(x, config=None):
    """Robust ICA of the rows of `x`.

    Parameters
    ----------
    x : array_like, shape (n, d)
        Observations, one per row.
    config : RicaConfig, optional

    Returns
    -------
    UnmixResult
    """
    config = config or RicaConfig()
    d = as_sample(x).shape[1]
    sweeps = d + 1 if config.sweeps is None else config.sweeps
    return _fit(x, config, "bowl_dcor", config.use_mcd_whitening, sweeps, "rica")


def dcovica_fit(x, config=None):
    """dCovICA: classical whitening and raw distance covariance terms.

    Uses the same sequential angle search as :func:`rica_fit`; sweeps
    default to 0 and ``use_mcd_whitening`` is ignored.
    """
    config = config or RicaConfig()
    sweeps = 0 if config.sweeps is None else config.sweeps
    return _fit(x, config, "dcov", False, sweeps, "dcovica")


METHODS = {"rica": rica_fit, "dcovica": dcovica_fit}


def fit(method, x, config=None):
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValidationError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None
    return fn(x, config)


def no_sweeps(config):
    """Copy of `config` with sweeps disabled."""
    return replace(config, sweeps=0)
