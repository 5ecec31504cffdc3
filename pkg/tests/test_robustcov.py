import math
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rica.exceptions import ConditioningError, DimensionError, ExactFitError, ValidationError
from rica.robustcov import (
    classical_whiten,
    fast_mcd,
    inverse_sqrt,
    mcd_consistency_factor,
    mcd_whiten,
    sample_covariance,
    whiten,
)


def test_sample_covariance_two_points():
    assert np.allclose(sample_covariance([[0.0, 0.0], [2.0, 2.0]]), [[2.0, 2.0], [2.0, 2.0]])


def test_sample_covariance_identical_rows():
    assert np.array_equal(sample_covariance(np.ones((5, 3))), np.zeros((3, 3)))


def test_sample_covariance_matches_numpy():
    x = np.random.default_rng(0).normal(size=(50, 4))
    assert np.allclose(sample_covariance(x), np.cov(x, rowvar=False), atol=1e-14)


def test_sample_covariance_large_normal():
    n = 20_000
    x = np.random.default_rng(1).normal(size=(n, 3))
    assert np.max(np.abs(sample_covariance(x) - np.eye(3))) < 5 / np.sqrt(n)


def test_sample_covariance_needs_two_rows():
    with pytest.raises(DimensionError):
        sample_covariance([[1.0, 2.0]])


def test_consistency_factor_values():
    assert mcd_consistency_factor(100, 100, 2) == 1.0
    # h/n = 1/2, d = 1: the chi2_1 median is Phi^-1(3/4)^2 and the chi2_3 cdf
    # has the closed form erf(sqrt(x/2)) - sqrt(2x/pi) exp(-x/2)
    x = NormalDist().inv_cdf(0.75) ** 2
    cdf3 = math.erf(math.sqrt(x / 2)) - math.sqrt(2 * x / math.pi) * math.exp(-x / 2)
    assert mcd_consistency_factor(50, 100, 1) == pytest.approx(0.5 / cdf3, rel=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_mcd_clean_gaussian(seed):
    x = np.random.default_rng(seed).normal(size=(1000, 2))
    res = fast_mcd(x, seed=seed)
    assert np.all(np.abs(res.location) < 0.15)
    assert np.linalg.norm(res.scatter - np.eye(2), 2) < 0.2


@pytest.mark.parametrize("seed", range(10))
def test_mcd_resists_cluster(seed):
    rng = np.random.default_rng(100 + seed)
    x = rng.normal(size=(1000, 2))
    rows = rng.choice(1000, 200, replace=False)
    x[rows] = rng.normal(loc=15.0, size=(200, 2))
    res = fast_mcd(x, seed=seed)
    assert np.all(np.abs(res.location) < 0.3)
    assert np.all(np.abs(x.mean(axis=0) - 3.0) < 0.3)


def test_full_subset_reduces_to_sample_estimates():
    x = np.random.default_rng(3).normal(size=(60, 3))
    res = fast_mcd(x, h_fraction=1.0, reweight=False)
    assert res.h == 60 and res.consistency_factor == 1.0
    assert np.allclose(res.location, x.mean(axis=0))
    assert np.allclose(res.scatter, sample_covariance(x))


def test_raw_and_reweighted_fields():
    x = np.random.default_rng(4).normal(size=(200, 2))
    raw = fast_mcd(x, reweight=False)
    rw = fast_mcd(x)
    assert not raw.reweighted and rw.reweighted
    assert np.array_equal(raw.raw_scatter, rw.raw_scatter)
    assert np.array_equal(rw.raw_location, raw.location)
    assert rw.weights.sum() > 0.9 * 200


def test_mcd_is_deterministic_given_seed():
    x = np.random.default_rng(5).standard_t(3, size=(150, 3))
    a, b = fast_mcd(x, seed=9), fast_mcd(x, seed=9)
    assert np.array_equal(a.scatter, b.scatter) and np.array_equal(a.subset, b.subset)


def test_cstep_traces_are_non_increasing():
    x = np.random.default_rng(6).standard_t(2, size=(300, 2))
    res = fast_mcd(x)
    for trace in res.cstep_trace:
        assert all(b <= a * (1 + 1e-12) for a, b in zip(trace, trace[1:]))


def test_mcd_input_checks():
    with pytest.raises(DimensionError):
        fast_mcd(np.zeros((5, 3)))
    with pytest.raises(ValidationError):
        fast_mcd(np.random.default_rng(0).normal(size=(50, 2)), h_fraction=0.3)


def test_mcd_exact_fit():
    x = np.zeros((40, 2))
    x[:, 0] = np.arange(40)
    with pytest.raises(ExactFitError):
        fast_mcd(x)


def test_mcd_not_worse_than_sklearn():
    skl = pytest.importorskip("sklearn.covariance")
    for seed in range(3):
        rng = np.random.default_rng(seed)
        x = rng.standard_t(3, size=(300, 3))
        x[:40] += 8.0
        ref = skl.MinCovDet(support_fraction=0.75, random_state=seed).fit(x)
        ref_det = np.linalg.det(np.cov(x[ref.raw_support_], rowvar=False))
        ours = fast_mcd(x, seed=seed, reweight=False)
        assert ours.raw_determinant <= ref_det * 1.01


def test_inverse_sqrt_diagonal():
    assert np.allclose(inverse_sqrt(np.diag([4.0, 9.0])), np.diag([0.5, 1.0 / 3.0]))


def test_inverse_sqrt_rejects_singular():
    with pytest.raises(ConditioningError):
        inverse_sqrt(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(DimensionError):
        inverse_sqrt(np.ones((2, 3)))


def test_whiten_identity_scatter():
    x = np.random.default_rng(7).normal(size=(20, 2))
    c = np.array([1.0, -2.0])
    assert np.allclose(whiten(x, np.eye(2), c).z, x - c)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_classical_whitening_round_trip(seed, d):
    rng = np.random.default_rng(seed)
    q1, _ = np.linalg.qr(rng.normal(size=(d, d)))
    q2, _ = np.linalg.qr(rng.normal(size=(d, d)))
    a = q1 @ np.diag(rng.uniform(0.5, 3.0, size=d)) @ q2
    x = rng.normal(size=(200, d)) @ a.T
    z = classical_whiten(x).z
    assert np.allclose(sample_covariance(z), np.eye(d), atol=1e-10)


def test_mcd_whitening_of_clean_data():
    rng = np.random.default_rng(8)
    a = np.array([[2.0, 0.5], [0.3, 1.0]])
    x = rng.normal(size=(2000, 2)) @ a.T
    white, mcd = mcd_whiten(x, seed=1)
    assert np.linalg.norm(sample_covariance(white.z) - np.eye(2), 2) < 0.15
