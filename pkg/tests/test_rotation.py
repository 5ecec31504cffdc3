import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rica.exceptions import ValidationError
from rica.rotation import (
    BOUND_EPS,
    AngleVector,
    angle_bounds,
    angle_pairs,
    block_matrix,
    block_slice,
    canonicalize,
    compose,
    givens,
    n_angles,
    partial_product,
    row_dependency_check,
)


def _random_angles(rng, d):
    lo, hi = angle_bounds(d)
    return AngleVector(d, rng.uniform(lo, hi))


def test_givens_zero_and_quarter_turn():
    assert np.array_equal(givens(2, 0, 1, 0.0), np.eye(2))
    assert np.allclose(givens(2, 0, 1, np.pi / 2), [[0.0, 1.0], [-1.0, 0.0]], atol=1e-16)


@pytest.mark.parametrize("angle", [0.3, 2.0, -1.1, 5.9])
def test_givens_orthogonal(angle):
    g = givens(4, 1, 3, angle)
    assert np.max(np.abs(g @ g.T - np.eye(4))) <= 1e-15
    assert g[1, 3] == pytest.approx(np.sin(angle)) and g[3, 1] == pytest.approx(-np.sin(angle))


@pytest.mark.parametrize("i,j", [(1, 1), (2, 1), (0, 4), (-1, 2)])
def test_givens_bad_indices(i, j):
    with pytest.raises(ValidationError):
        givens(4, i, j, 0.1)


def test_layout():
    assert n_angles(4) == 6
    assert angle_pairs(4) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert block_slice(4, 1) == slice(3, 5)
    av = AngleVector(4, np.arange(6.0))
    assert av[(1, 3)] == 4.0
    assert np.array_equal(av.block(2), [5.0])
    assert np.array_equal(av.with_block(0, [9, 9, 9]).theta, [9, 9, 9, 3, 4, 5])


def test_angle_vector_shape_checked():
    with pytest.raises(ValidationError):
        AngleVector(3, np.zeros(2))
    with pytest.raises(ValidationError):
        AngleVector(1, np.zeros(0))


def test_bounds():
    lo, hi = angle_bounds(3)
    assert np.array_equal(lo, np.zeros(3))
    assert np.allclose(hi, [2 * np.pi - BOUND_EPS, 2 * np.pi - BOUND_EPS, np.pi - BOUND_EPS])
    lo1, hi1 = angle_bounds(3, k=1)
    assert hi1.shape == (1,)


def test_compose_zero_is_identity():
    assert np.array_equal(compose(AngleVector.zeros(5)), np.eye(5))


def test_compose_d2_single_rotation():
    assert np.array_equal(compose(AngleVector(2, [0.7])), givens(2, 0, 1, 0.7))


def test_compose_factor_order():
    av = AngleVector(3, [0.1, 0.2, 0.3])
    expected = givens(3, 1, 2, 0.3) @ givens(3, 0, 2, 0.2) @ givens(3, 0, 1, 0.1)
    assert np.allclose(compose(av), expected, atol=1e-15)
    assert np.allclose(block_matrix(3, 0, [0.1, 0.2]), givens(3, 0, 2, 0.2) @ givens(3, 0, 1, 0.1))
    assert np.allclose(partial_product(av, 0), block_matrix(3, 0, [0.1, 0.2]))


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_compose_special_orthogonal(d):
    rng = np.random.default_rng(d)
    for _ in range(200):
        u = compose(_random_angles(rng, d))
        assert np.max(np.abs(u @ u.T - np.eye(d))) <= 1e-12
        assert abs(np.linalg.det(u) - 1.0) <= 1e-12


def test_row_zero_ignores_later_block_d3():
    av = AngleVector(3, [0.4, 1.2, 0.9])
    moved = AngleVector(3, [0.4, 1.2, 2.5])
    assert np.array_equal(compose(av)[0], compose(moved)[0])


def test_rows_fixed_by_first_blocks_d4():
    rng = np.random.default_rng(0)
    av = _random_angles(rng, 4)
    theta = av.theta.copy()
    theta[angle_pairs(4).index((2, 3))] += 1.0
    u, v = compose(av), compose(AngleVector(4, theta))
    assert np.max(np.abs(u[:2] - v[:2])) <= 1e-14


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_row_dependency_invariant(d):
    rng = np.random.default_rng(10 + d)
    for _ in range(20):
        av = _random_angles(rng, d)
        for k in range(d):
            assert row_dependency_check(av, k)


def test_row_dependency_check_detects_violation():
    # row 1 depends on block 1, so treating it as fixed after block 0 fails
    av = AngleVector(3, [0.4, 1.2, 0.9])
    theta = av.theta.copy()
    theta[2] += 0.37
    assert not np.allclose(compose(av)[1], compose(AngleVector(3, theta))[1])


def test_canonicalize_block_zero_keeps_matrix():
    av = AngleVector(3, [7.0, -1.0, 0.5])
    c = canonicalize(av)
    assert c.in_range()
    assert np.allclose(c.theta, [7.0 - 2 * np.pi, 2 * np.pi - 1.0, 0.5])
    assert np.allclose(compose(c), compose(av), atol=1e-14)


def test_canonicalize_later_blocks_flip_signs_only():
    av = AngleVector(3, [0.3, 0.2, 4.0])
    c = canonicalize(av)
    assert c.in_range()
    assert np.allclose(np.abs(compose(c)), np.abs(compose(av)))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda d: st.tuples(st.just(d), st.lists(st.floats(-20, 20), min_size=n_angles(d), max_size=n_angles(d)))))
def test_compose_orthogonal_property(args):
    d, theta = args
    u = compose(AngleVector(d, theta))
    assert np.max(np.abs(u @ u.T - np.eye(d))) <= 1e-12
