import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import chi2, norm

from rica.exceptions import DegenerateScaleError, ValidationError
from rica.transforms import (
    BILOOP_C,
    biloop,
    biloop_dcor_stats,
    biloop_features,
    bowl,
    bowl_dcor,
    bowl_scale,
    chi2_quantile,
    robust_standardize,
)


# chi-square quantiles ------------------------------------------------------


@pytest.mark.parametrize("prob", [0.9975, 0.5, 0.1, 0.99])
def test_chi2_two_df_closed_form(prob):
    # two degrees of freedom: exponential with mean 2
    assert abs(chi2_quantile(prob, 2) - (-2.0 * np.log1p(-prob))) <= 1e-6


def test_chi2_reference_values():
    assert abs(chi2_quantile(0.9975, 2) - 11.9829) <= 1e-4
    assert abs(chi2_quantile(0.5, 2) - 1.386294) <= 1e-6


def test_chi2_one_df_matches_normal_quantile():
    z = norm.ppf(1.0 - 0.0025 / 2.0)
    assert np.sqrt(chi2_quantile(0.9975, 1)) == pytest.approx(z, abs=1e-9)
    assert np.sqrt(chi2_quantile(0.9975, 1)) == pytest.approx(3.0233, abs=1e-4)


@pytest.mark.parametrize("df", [1, 2, 3, 5, 10])
@pytest.mark.parametrize("prob", [0.01, 0.5, 0.9975])
def test_chi2_matches_scipy(df, prob):
    assert chi2_quantile(prob, df) == pytest.approx(chi2.ppf(prob, df), rel=1e-9)


@pytest.mark.parametrize("prob,df", [(0.0, 2), (1.0, 2), (0.5, 0), (0.5, 1.5)])
def test_chi2_rejects_bad_arguments(prob, df):
    with pytest.raises(ValidationError):
        chi2_quantile(prob, df)


# bowl ---------------------------------------------------------------------


@pytest.mark.parametrize("p", [1, 2, 5])
def test_bowl_origin(p):
    assert np.array_equal(bowl(np.zeros(p)), np.zeros(p + 1))


@pytest.mark.parametrize("p", [1, 2, 3])
def test_bowl_redescends(p):
    rng = np.random.default_rng(p)
    q = bowl_scale(p)
    direction = rng.normal(size=(50, p))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    far = direction * rng.uniform(100 * q, 1e6, size=(50, 1))
    assert np.max(np.linalg.norm(bowl(far), axis=1)) < 1e-3


def test_bowl_v2_peak():
    # u^6 (1-u)^2 peaks at u = 3/4
    q = bowl_scale(1)
    r = q * np.arctanh(np.linspace(0.01, 0.99, 20001))
    v2 = bowl(r[:, None])[:, 1]
    assert v2.max() == pytest.approx(10 * 0.75**6 * 0.25**2, abs=1e-8)
    assert 10 * 0.75**6 * 0.25**2 == pytest.approx(0.11124, abs=1e-5)


def test_bowl_rotation_equivariance():
    rng = np.random.default_rng(0)
    x = rng.normal(scale=3, size=(200, 3))
    r, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    lhs = bowl(x @ r.T)
    rhs = bowl(x)
    assert np.max(np.abs(lhs[:, :3] - rhs[:, :3] @ r.T)) <= 1e-12
    assert np.max(np.abs(lhs[:, 3] - rhs[:, 3])) <= 1e-12


def test_bowl_injective_on_grid():
    x = np.linspace(-50, 50, 10_000)[:, None]
    out = bowl(x)
    assert np.unique(out, axis=0).shape[0] == x.shape[0]


def test_bowl_vector_and_matrix_agree():
    x = np.array([[0.3, -1.2], [4.0, 2.0]])
    assert np.array_equal(bowl(x)[1], bowl(x[1]))


def test_bowl_rejects_bad_input():
    with pytest.raises(ValidationError):
        bowl([np.inf, 0.0])
    with pytest.raises(ValidationError):
        bowl([1.0], q=0.0)


def _v1_sup(p):
    # sup over radii of 10 u^2 (1-u)^2 r with r = q artanh(u), on a fine grid
    u = np.linspace(1e-6, 1 - 1e-9, 2_000_001)
    return np.max(10 * u**2 * (1 - u) ** 2 * bowl_scale(p) * np.arctanh(u))


@settings(max_examples=100, deadline=None)
@given(arrays(float, (7, 2), elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_bowl_bounded(x):
    out = bowl(x)
    assert np.all(np.isfinite(out))
    assert np.all(np.linalg.norm(out[:, :2], axis=1) <= _v1_sup(2) + 1e-9)
    assert np.all((out[:, 2] >= 0) & (out[:, 2] <= 0.1113))


# biloop -------------------------------------------------------------------


def test_biloop_origin_and_limit():
    assert biloop(0.0) == (0.0, 0.0)
    u, v = biloop(1e6)
    assert abs(u) < 1e-12 and abs(v) < 1e-12


def test_biloop_odd_symmetry():
    x = np.linspace(-30, 30, 4001)
    u, v = biloop(x)
    um, vm = biloop(-x)
    assert np.max(np.abs(u + um)) <= 1e-12
    assert np.max(np.abs(v + vm)) <= 1e-12


def test_biloop_injective_on_grid():
    x = np.sort(np.linspace(-50, 50, 10_000))
    u, v = biloop(x)
    assert np.unique(np.column_stack([u, v]), axis=0).shape[0] == x.size


def test_biloop_bounded():
    u, v = biloop(np.linspace(-1e3, 1e3, 10001))
    assert np.all(np.abs(u) <= 2 * BILOOP_C) and np.all(np.abs(v) <= 1)


# robust standardization ---------------------------------------------------


def test_robust_standardize_basic():
    assert np.allclose(robust_standardize([1.0, 2.0, 3.0]), [-1.0, 0.0, 1.0])


def test_robust_standardize_scaled():
    out = robust_standardize([1.0, 2.0, 3.0], scaled=True)
    assert out[2] == pytest.approx(1.0 / 1.482602218505602)


@pytest.mark.parametrize("col", [[4.0, 4.0, 4.0], [0.0, 0.0, 0.0, 100.0]])
def test_robust_standardize_degenerate(col):
    with pytest.raises(DegenerateScaleError):
        robust_standardize(col)


def test_biloop_features_standardize_first():
    rng = np.random.default_rng(1)
    x = rng.normal(loc=50, scale=7, size=(100, 1))
    expected = np.column_stack(biloop(robust_standardize(x[:, 0])))
    assert np.array_equal(biloop_features(x), expected)
    # location and scale of the raw data do not matter
    assert np.allclose(biloop_features(3 * x - 20), expected)


# transformed dependence ---------------------------------------------------


def test_bowl_dcor_sign_flip_copy():
    x = np.random.default_rng(11).normal(size=1000)
    assert bowl_dcor(x, -x) > 0.5


def test_bowl_dcor_independent_uniforms():
    rng = np.random.default_rng(12)
    assert bowl_dcor(rng.uniform(size=1000), rng.uniform(size=1000)) < 0.1


def test_bowl_dcor_identity():
    x = np.random.default_rng(13).normal(size=(300, 2))
    assert abs(bowl_dcor(x, x) - 1.0) <= 1e-12


def test_bowl_dcor_resists_far_outliers():
    rng = np.random.default_rng(14)
    x, y = rng.normal(size=(2, 500))
    clean = bowl_dcor(x, y)
    x[:50] = y[:50] = 1e4 + rng.normal(size=50)
    assert bowl_dcor(x, y) < clean + 0.05


def test_biloop_dcor_dependent_pair():
    rng = np.random.default_rng(15)
    x = rng.normal(size=500)
    # about 0.27 here, against roughly 0.01 for an independent pair
    assert biloop_dcor_stats(x, x**2).dcor > 0.15
