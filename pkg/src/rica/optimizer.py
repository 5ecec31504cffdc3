"""Bound-constrained derivative-free minimization over small angle blocks.

The local solver is scipy's COBYQA, a trust-region method built on
quadratic interpolation models that never evaluates outside the bounds.
This module adds the bookkeeping the estimators rely on: a record of every
evaluated point, best-so-far tracking, a hard error on non-finite objective
values, and deterministic multistart selection.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import Bounds
from scipy.optimize import minimize as _scipy_minimize

from .exceptions import ObjectiveError, ValidationError

# COBYQA exit statuses that mean "stopped on the trust-region radius"
_RADIUS_STATUSES = {0, 1, 2}


@dataclass
class OptProblem:
    objective: Callable[[np.ndarray], float]
    lower: np.ndarray
    upper: np.ndarray
    initial: np.ndarray
    max_evals: int | None = None
    radius_init: float = 0.5
    radius_final: float = 1e-4

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        self.initial = np.atleast_1d(np.asarray(self.initial, dtype=float))
        m = self.lower.size
        if self.upper.size != m or self.initial.size != m:
            raise ValidationError("lower, upper and initial must have the same length")
        if not np.all(self.lower < self.upper):
            raise ValidationError("need lower < upper componentwise")
        if self.max_evals is None:
            self.max_evals = 100 * m
        if self.max_evals < m + 2:
            raise ValidationError(f"max_evals must be at least dimension + 2 = {m + 2}")
        if not 0 < self.radius_final < self.radius_init:
            raise ValidationError("need 0 < radius_final < radius_init")
        self.check_start(self.initial)

    @property
    def dim(self):
        return self.lower.size

    def check_start(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.lower) or np.any(x > self.upper):
            raise ValidationError(f"start {x} lies outside the box")
        return x


@dataclass
class OptResult:
    minimizer: np.ndarray
    objective_value: float
    evaluations: int
    converged_by: str  # "radius" or "eval_budget"
    initial_value: float = float("nan")
    points: list = field(default_factory=list, repr=False)
    values: list = field(default_factory=list, repr=False)
    box_violations: int = 0


class _Recorder:
    """Objective wrapper recording evaluations and the incumbent."""

    def __init__(self, problem):
        self.problem = problem
        self.points = []
        self.values = []
        self.violations = 0
        self.best_x = None
        self.best_f = np.inf

    def __call__(self, x):
        x = np.array(x, dtype=float)
        p = self.problem
        if np.any(x < p.lower) or np.any(x > p.upper):
            self.violations += 1
            x = np.clip(x, p.lower, p.upper)
        f = float(p.objective(x))
        if not np.isfinite(f):
            raise ObjectiveError(f"objective returned {f} at {x}", point=x)
        self.points.append(x)
        self.values.append(f)
        if f < self.best_f:
            self.best_f = f
            self.best_x = x
        return f


def minimize(problem):
    """Local bound-constrained minimization from ``problem.initial``.

    The returned minimizer is the best point evaluated, so the result never
    does worse than the start.
    """
    rec = _Recorder(problem)
    budget = problem.max_evals
    status = 0
    if budget >= problem.dim + 2:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = _scipy_minimize(
                rec,
                problem.initial,
                method="COBYQA",
                bounds=Bounds(problem.lower, problem.upper),
                options={
                    "initial_tr_radius": problem.radius_init,
                    "final_tr_radius": problem.radius_final,
                    "maxfev": budget,
                },
            )
        status = res.status
    else:
        status = 3
    if not rec.points or not np.array_equal(rec.points[0], problem.initial):
        # COBYQA starts at x0; guard the "never worse than the start" contract anyway
        rec(problem.initial)
        idx = len(rec.values) - 1
    else:
        idx = 0
    f0 = rec.values[idx]
    converged_by = "radius" if status in _RADIUS_STATUSES else "eval_budget"
    return OptResult(
        minimizer=rec.best_x.copy(),
        objective_value=rec.best_f,
        evaluations=len(rec.values),
        converged_by=converged_by,
        initial_value=f0,
        points=rec.points,
        values=rec.values,
        box_violations=rec.violations,
    )


def multistart_minimize(problem, starts):
    """Run :func:`minimize` from every start and keep the best result.

    Ties go to the start listed first. The returned ``evaluations`` counts
    all runs.
    """
    starts = [problem.check_start(s) for s in starts]
    if not starts:
        raise ValidationError("need at least one start")
    best = None
    total = 0
    violations = 0
    for s in starts:
        sub = OptProblem(
            problem.objective,
            problem.lower,
            problem.upper,
            s,
            problem.max_evals,
            problem.radius_init,
            problem.radius_final,
        )
        res = minimize(sub)
        total += res.evaluations
        violations += res.box_violations
        if best is None or res.objective_value < best.objective_value:
            best = res
    best.evaluations = total
    best.box_violations = violations
    return best


def lattice_starts(lower, upper, per_dim=4, cap=16):
    """Low-discrepancy start points filling the box.

    Uses the additive recurrence with the generalized golden ratio, so
    ``min(per_dim ** m, cap)`` points are spread without the aliasing a
    regular grid has on periodic objectives.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    m = lower.size
    count = int(min(per_dim**m, cap))
    # phi_m: unique positive root of x^(m+1) = x + 1
    phi = 2.0
    for _ in range(60):
        phi = (1.0 + phi) ** (1.0 / (m + 1))
    alpha = (1.0 / phi) ** np.arange(1, m + 1)
    pts = np.mod(0.5 + np.outer(np.arange(count), alpha), 1.0)
    return lower + pts * (upper - lower)
