import numpy as np
import pytest

from gmrf_diffusion.errors import DimensionMismatch, InvalidParameter, InvalidSupport
from gmrf_diffusion.seeds import derive_stream, role_hash
from gmrf_diffusion.signals import (
    ParameterProcess,
    RegressorStats,
    draw_regressors,
    initial_parameter,
    make_sparse_parameter,
    observe,
    step_parameter,
)


def test_regressor_stats_validation():
    with pytest.raises(InvalidParameter):
        RegressorStats(3, np.array([1.0, 0.0]))
    with pytest.raises(InvalidParameter):
        RegressorStats(0, np.array([1.0]))
    stats = RegressorStats(4, [0.5, 2.0])
    assert stats.n_nodes == 2


def test_regressor_moments():
    powers = np.array([0.5, 1.0, 2.0, 0.8])
    stats = RegressorStats(10, powers)
    rng = np.random.default_rng(21)
    n = 10 ** 5
    U = draw_regressors(stats, rng, size=n)
    assert U.shape == (n, 4, 10)
    emp = U.var(axis=(0, 2))
    # SE of the variance estimate over n*M samples: power * sqrt(2/(n*M))
    se = powers * np.sqrt(2.0 / (n * 10))
    assert np.all(np.abs(emp - powers) < 3 * se)
    # spatial independence: correlation of first entries across node pairs
    flat = U[:, :, 0]
    corr = np.corrcoef(flat.T)
    off = corr[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off)) < 0.01


def test_regressor_temporal_whiteness():
    stats = RegressorStats(3, [1.0, 1.5])
    U = draw_regressors(stats, np.random.default_rng(5), size=10 ** 5)
    # surrogate: inner product of consecutive regressors has zero mean
    prod = np.einsum("knm,knm->kn", U[:-1], U[1:])
    se = prod.std(axis=0) / np.sqrt(prod.shape[0])
    assert np.all(np.abs(prod.mean(axis=0)) < 3 * se)


def test_observe_cases():
    rng = np.random.default_rng(2)
    U = rng.standard_normal((5, 3))
    v = rng.standard_normal(5)
    np.testing.assert_allclose(observe(np.zeros(3), U, v), v)
    x = observe(np.array([1.0, 2.0, 3.0]), np.eye(3), np.zeros(3))
    np.testing.assert_allclose(x, [1.0, 2.0, 3.0])
    theta = rng.standard_normal(3)
    x = observe(theta, U, v)
    np.testing.assert_allclose(x - U @ theta - v, 0.0, atol=1e-15)
    with pytest.raises(DimensionMismatch):
        observe(np.zeros(4), U, v)


def test_observe_batched():
    rng = np.random.default_rng(3)
    U = rng.standard_normal((7, 5, 3))
    v = rng.standard_normal((7, 5))
    theta = rng.standard_normal(3)
    x = observe(theta, U, v)
    assert x.shape == (7, 5)
    np.testing.assert_allclose(x[2], U[2] @ theta + v[2])


def test_static_parameter_unchanged():
    proc = ParameterProcess(kind="static", theta0=[1.0, -2.0])
    theta = initial_parameter(proc, 2, np.random.default_rng(0))
    out = step_parameter(proc, theta, 5, np.random.default_rng(1))
    np.testing.assert_array_equal(out, [1.0, -2.0])


def test_sparse_parameter():
    rng = np.random.default_rng(8)
    theta = make_sparse_parameter(50, 6, 1.0, rng)
    assert np.count_nonzero(theta) == 6
    assert set(np.unique(theta)) <= {0.0, 1.0}
    assert np.count_nonzero(make_sparse_parameter(5, 5, 2.0, rng)) == 5
    np.testing.assert_array_equal(make_sparse_parameter(4, 0, 1.0, rng), np.zeros(4))
    with pytest.raises(InvalidSupport):
        make_sparse_parameter(4, 5, 1.0, rng)


def test_ar_tracking_statistics():
    proc = ParameterProcess(kind="ar-tracking", ar_coeff=0.98,
                            drive_mean=0.01, drive_var=4e-2)
    rng = np.random.default_rng(99)
    theta = np.zeros(4)
    samples = []
    for k in range(20000):
        theta = step_parameter(proc, theta, k, rng)
        if k > 2000:
            samples.append(theta.copy())
    samples = np.asarray(samples)
    # stationary mean drive_mean/(1-a) = 0.5, variance drive_var/(1-a^2)
    assert np.abs(samples.mean() - 0.5) < 0.05
    assert np.abs(samples.var() - 4e-2 / (1 - 0.98 ** 2)) < 0.15


def test_ar_degenerate_drive():
    proc = ParameterProcess(kind="ar-tracking", ar_coeff=0.0,
                            drive_mean=0.3, drive_var=0.0)
    theta = np.array([5.0, -1.0])
    out = step_parameter(proc, theta, 1, np.random.default_rng(0))
    np.testing.assert_allclose(out, [0.3, 0.3])


def test_zero_intervals():
    proc = ParameterProcess(kind="ar-tracking", ar_coeff=0.9, drive_mean=0.1,
                            drive_var=0.01, zero_intervals=((10, 20, 1),))
    rng = np.random.default_rng(4)
    theta = np.ones(3)
    for k in range(30):
        theta = step_parameter(proc, theta, k, rng)
        if 10 <= k < 20:
            assert theta[1] == 0.0
        elif k >= 20:
            # regrows from zero via the AR recursion
            assert theta[1] != 0.0 or k == 20
    assert theta[0] != 0.0


def test_zero_interval_whole_vector():
    proc = ParameterProcess(kind="ar-tracking", ar_coeff=0.9, drive_mean=0.1,
                            drive_var=0.01, zero_intervals=((5, 8),))
    rng = np.random.default_rng(4)
    theta = np.ones(3)
    for k in range(10):
        theta = step_parameter(proc, theta, k, rng)
        if 5 <= k < 8:
            assert np.all(theta == 0.0)
    assert np.all(theta != 0.0)


def test_parameter_validation():
    with pytest.raises(InvalidParameter):
        ParameterProcess(kind="wiggle")
    with pytest.raises(InvalidParameter):
        ParameterProcess(kind="ar-tracking", ar_coeff=1.0)
    with pytest.raises(InvalidParameter):
        initial_parameter(ParameterProcess(kind="static-sparse"), 4,
                          np.random.default_rng(0))
    with pytest.raises(DimensionMismatch):
        initial_parameter(ParameterProcess(kind="static", theta0=[1.0]), 3,
                          np.random.default_rng(0))


def test_stream_determinism():
    a = derive_stream(123, 7, "data").standard_normal(10)
    b = derive_stream(123, 7, "data").standard_normal(10)
    np.testing.assert_array_equal(a, b)
    c = derive_stream(123, 8, "data").standard_normal(10)
    d = derive_stream(123, 7, "param").standard_normal(10)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    assert role_hash("data") != role_hash("param")
