"""Givens-angle parametrization of orthogonal separating matrices.

Indices are 0-based: the angle ``theta[i, j]`` with ``0 <= i < j < d``
rotates coordinates ``i`` and ``j``. Angles are grouped in blocks, block
``k`` holding ``theta[k, k+1], ..., theta[k, d-1]``, and

    U(theta) = Q^(d-2) ... Q^1 Q^0,
    Q^k      = G(k, d-1) G(k, d-2) ... G(k, k+1).

Because ``Q^m`` only touches coordinates ``>= m``, row ``k`` of ``U`` is
fixed once blocks ``0..k`` are, which is what allows estimating the blocks
one after another.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

#: Half-open angle ranges are closed to ``[0, upper - BOUND_EPS]`` for solvers.
BOUND_EPS = 1e-9


def n_angles(d):
    return d * (d - 1) // 2


def angle_pairs(d):
    """``(i, j)`` pairs in storage order: block 0 first, then block 1, ..."""
    return [(i, j) for i in range(d - 1) for j in range(i + 1, d)]


def block_slice(d, k):
    """Slice of the flat angle array holding block `k`."""
    start = sum(d - 1 - b for b in range(k))
    return slice(start, start + d - 1 - k)


@dataclass
class AngleVector:
    """Flat container of the ``d(d-1)/2`` Givens angles."""

    d: int
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).copy()
        if self.d < 2:
            raise ValidationError(f"d must be at least 2, got {self.d}")
        if self.theta.shape != (n_angles(self.d),):
            raise ValidationError(
                f"expected {n_angles(self.d)} angles for d = {self.d}, got shape {self.theta.shape}"
            )

    @classmethod
    def zeros(cls, d):
        return cls(d, np.zeros(n_angles(d)))

    def __getitem__(self, ij):
        return self.theta[angle_pairs(self.d).index(tuple(ij))]

    def block(self, k):
        return self.theta[block_slice(self.d, k)]

    def with_block(self, k, values):
        theta = self.theta.copy()
        theta[block_slice(self.d, k)] = values
        return AngleVector(self.d, theta)

    def as_dict(self):
        return {pair: float(t) for pair, t in zip(angle_pairs(self.d), self.theta)}

    def in_range(self):
        """True when every angle lies in its canonical half-open range."""
        lo, hi = angle_bounds(self.d, eps=0.0)
        return bool(np.all(self.theta >= lo) and np.all(self.theta < hi))


def angle_bounds(d, k=None, eps=BOUND_EPS):
    """Lower and upper bounds, for block `k` or (if None) for all angles.

    Block 0 ranges over ``[0, 2 pi)``, the other blocks over ``[0, pi)``.
    """
    blocks = range(d - 1) if k is None else [k]
    upper = np.concatenate(
        [np.full(d - 1 - b, (2.0 * np.pi if b == 0 else np.pi) - eps) for b in blocks]
    )
    return np.zeros_like(upper), upper


def givens(d, i, j, angle):
    """Identity with ``(i,i) = (j,j) = cos``, ``(i,j) = sin``, ``(j,i) = -sin``."""
    if not (0 <= i < j < d):
        raise ValidationError(f"need 0 <= i < j < d, got i={i}, j={j}, d={d}")
    g = np.eye(d)
    c, s = np.cos(angle), np.sin(angle)
    g[i, i] = c
    g[j, j] = c
    g[i, j] = s
    g[j, i] = -s
    return g


def block_matrix(d, k, block_angles):
    """``Q^k = G(k, d-1) ... G(k, k+1)`` for the angles of block `k`."""
    block_angles = np.atleast_1d(np.asarray(block_angles, dtype=float))
    q = np.eye(d)
    for j in range(d - 1, k, -1):
        q = q @ givens(d, k, j, block_angles[j - k - 1])
    return q


def partial_product(angles, k):
    """``Q^k ... Q^0``, the factors that fix rows ``0..k`` of ``U``."""
    d = angles.d
    u = np.eye(d)
    for b in range(k, -1, -1):
        u = u @ block_matrix(d, b, angles.block(b))
    return u


def compose(angles):
    """The orthogonal matrix ``U(theta) = Q^(d-2) ... Q^0``."""
    return partial_product(angles, angles.d - 2)


def canonicalize(angles):
    """Wrap angles into their canonical ranges.

    Block 0 is reduced modulo ``2 pi`` (``compose`` is unchanged). Later
    blocks are reduced modulo ``pi``, which may flip the signs of some rows
    and columns of ``compose``.
    """
    d = angles.d
    theta = angles.theta.copy()
    s0 = block_slice(d, 0)
    theta[s0] = np.mod(theta[s0], 2.0 * np.pi)
    rest = slice(s0.stop, None)
    theta[rest] = np.mod(theta[rest], np.pi)
    return AngleVector(d, theta)


def row_dependency_check(angles, k, delta=0.37, atol=1e-14):
    """Check that row `k` of ``compose`` ignores the blocks after `k`.

    Every angle in a later block is shifted by `delta`, one at a time and
    all together; the check passes when row `k` moves by at most `atol`.
    """
    d = angles.d
    if not 0 <= k < d:
        raise ValidationError(f"k must lie in [0, {d}), got {k}")
    ref = compose(angles)[k]
    first_later = block_slice(d, k + 1).start if k + 1 <= d - 2 else n_angles(d)
    later = np.arange(n_angles(d)) >= first_later
    variants = [np.where(np.arange(n_angles(d)) == t, delta, 0.0) for t in np.flatnonzero(later)]
    if later.any():
        variants.append(np.where(later, delta, 0.0))
    for shift in variants:
        row = compose(AngleVector(d, angles.theta + shift))[k]
        if np.max(np.abs(row - ref)) > atol:
            return False
    return True
