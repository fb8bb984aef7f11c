import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infocommodity.ou_core import (
    OuParams,
    Schedule,
    TimeGrid,
    bridge_moments,
    bridge_sample,
    inhom_factor,
    inhom_sample_path,
    ou_cov,
    ou_mean,
    ou_sample_path,
    sinh_ratio,
)

pos = st.floats(0.01, 3.0)


def test_params_validation():
    with pytest.raises(ValueError):
        OuParams(kappa=0.0, theta=1.0, psi=0.1, x0=0.0)
    with pytest.raises(ValueError):
        OuParams(kappa=0.1, theta=1.0, psi=-0.1, x0=0.0)
    assert OuParams(kappa=0.2, theta=1.2, psi=0.4, x0=0.5).stationary_variance == pytest.approx(0.4)


def test_time_grid_spec():
    g = TimeGrid.from_spec("0:1:0.25")
    np.testing.assert_allclose(g.points, [0, 0.25, 0.5, 0.75, 1.0])
    assert TimeGrid.from_spec("0.5:1:0.25").points[0] == 0.0
    for bad in ("1:0:0.1", "0:1:0.3", "a:b:c", "0:1"):
        with pytest.raises(ValueError):
            TimeGrid.from_spec(bad)
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.5]))


def test_moments_at_zero_and_long_run(bridge_ou):
    assert ou_mean(bridge_ou, 0.0) == pytest.approx(bridge_ou.x0)
    assert ou_cov(bridge_ou, 0.0, 3.0) == 0.0
    assert ou_mean(bridge_ou, 1e4) == pytest.approx(bridge_ou.theta)
    assert ou_cov(bridge_ou, 1e4, 1e4) == pytest.approx(bridge_ou.stationary_variance)


@given(k=pos, s=st.floats(0.0, 5.0), dt=st.floats(0.0, 5.0))
def test_cov_formula(k, s, dt):
    p = OuParams(kappa=k, theta=0.3, psi=0.7, x0=0.0)
    t = s + dt
    expected = p.psi**2 / (2 * k) * (math.exp(-k * (t - s)) - math.exp(-k * (t + s)))
    assert ou_cov(p, s, t) == pytest.approx(expected, rel=1e-10, abs=1e-14)
    assert ou_cov(p, s, t) == pytest.approx(ou_cov(p, t, s), rel=0, abs=0)


def test_zero_noise_path_is_mean(bridge_ou):
    p = OuParams(kappa=0.2, theta=1.2, psi=0.0, x0=0.5)
    grid = np.linspace(0, 10, 11)
    np.testing.assert_allclose(ou_sample_path(p, grid, np.random.default_rng(0)), ou_mean(p, grid), rtol=1e-14)


def test_sampler_moments(bridge_ou):
    grid = np.array([0.0, 1.0, 3.0])
    x = ou_sample_path(bridge_ou, grid, np.random.default_rng(1), 200_000)
    n = x.shape[0]
    for j, t in enumerate(grid[1:], start=1):
        sd = math.sqrt(ou_cov(bridge_ou, t, t))
        assert abs(x[:, j].mean() - ou_mean(bridge_ou, t)) < 4 * sd / math.sqrt(n)
        assert x[:, j].var() == pytest.approx(ou_cov(bridge_ou, t, t), rel=0.02)
    c = np.cov(x[:, 1], x[:, 2])[0, 1]
    assert c == pytest.approx(ou_cov(bridge_ou, 1.0, 3.0), rel=0.03)


def test_orthogonal_increment(bridge_ou):
    x = ou_sample_path(bridge_ou, np.array([0.0, 2.0, 5.0]), np.random.default_rng(2), 100_000)
    resid = x[:, 2] - math.exp(-bridge_ou.kappa * 3.0) * x[:, 1]
    assert abs(np.corrcoef(x[:, 1], resid)[0, 1]) < 4 / math.sqrt(x.shape[0])


@given(a=st.floats(0.0, 50.0), frac=st.floats(0.0, 1.0))
def test_sinh_ratio_matches_direct(a, frac):
    b = max(a, 1e-3)
    a = frac * b
    assert float(sinh_ratio(a, b)) == pytest.approx(math.sinh(a) / math.sinh(b), rel=1e-10, abs=1e-300)


def test_sinh_ratio_large_arguments():
    # direct evaluation overflows here
    assert float(sinh_ratio(800.0, 1000.0)) == pytest.approx(math.exp(-200.0), rel=1e-12)
    assert float(sinh_ratio(1000.0, 1000.0)) == 1.0


def test_bridge_endpoints(bridge_ou):
    T = 365.0
    assert bridge_moments(bridge_ou, 0.0, T) == (pytest.approx(bridge_ou.x0, abs=1e-12), pytest.approx(0.0, abs=1e-12))
    m, v = bridge_moments(bridge_ou, T, T)
    assert abs(m) < 1e-12 and abs(v) < 1e-12
    _, v_mid = bridge_moments(bridge_ou, T / 2, T)
    assert v_mid == pytest.approx(0.4, rel=1e-12)


@given(k=pos, T=st.floats(0.1, 50.0), frac=st.floats(0.0, 1.0))
def test_bridge_variance_nonnegative_and_bounded(k, T, frac):
    p = OuParams(kappa=k, theta=1.0, psi=0.5, x0=0.2)
    _, v = bridge_moments(p, frac * T, T)
    assert 0.0 <= v <= p.stationary_variance * (1 + 1e-12)


def test_bridge_short_horizon_against_brownian_bridge():
    # kappa T -> 0: the OU bridge variance tends to psi^2 t (T - t) / T
    p = OuParams(kappa=1e-6, theta=0.0, psi=1.0, x0=0.0)
    _, v = bridge_moments(p, 0.3, 1.0)
    assert v == pytest.approx(0.3 * 0.7, rel=1e-5)


def test_bridge_sample_matches_moments(bridge_ou):
    T = 20.0
    grid = np.linspace(0, T, 5)
    b = bridge_sample(bridge_ou, grid, np.random.default_rng(3), 100_000).value
    m, v = bridge_moments(bridge_ou, grid, T)
    np.testing.assert_allclose(b.mean(axis=0), m, atol=4 * math.sqrt(v.max() / 1e5) + 1e-12)
    np.testing.assert_allclose(b.var(axis=0)[1:-1], v[1:-1], rtol=0.02)
    assert np.all(b[:, -1] == 0.0)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule((1.0,), (0.1,), (0.1, 0.2), (0.1, 0.1))
    with pytest.raises(ValueError):
        Schedule((2.0, 1.0), (0.1,) * 3, (0.1,) * 3, (0.1,) * 3)
    with pytest.raises(ValueError):
        Schedule((1.0,), (0.1, 0.0), (0.1, 0.2), (0.1, 0.1))


def test_inhom_factor():
    s = Schedule((1.0, 3.0), (0.1, 0.2, 0.5), (1, 1, 1), (0.1, 0.1, 0.1))
    assert inhom_factor(s, 0.5) == pytest.approx(0.05)
    assert inhom_factor(s, 2.0) == pytest.approx(0.1 + 0.2)
    assert inhom_factor(s, 4.0) == pytest.approx(0.1 + 0.4 + 0.5)
    p = OuParams(kappa=0.3, theta=1, psi=1, x0=0)
    assert inhom_factor(Schedule.constant(p), 7.0) == pytest.approx(2.1)


def test_inhom_constant_schedule_reproduces_homogeneous(bridge_ou):
    grid = np.linspace(0, 5, 51)
    a = ou_sample_path(bridge_ou, grid, np.random.default_rng(9), 10)
    b = inhom_sample_path(Schedule.constant(bridge_ou), bridge_ou.x0, grid, np.random.default_rng(9), 10)
    assert np.array_equal(a, b)


def test_inhom_orthogonality_and_mean():
    s = Schedule((1.0,), (0.3, 1.0), (0.5, 2.0), (0.2, 0.4))
    grid = np.array([0.0, 0.7, 2.5])
    x = inhom_sample_path(s, 0.0, grid, np.random.default_rng(4), 200_000)
    decay = math.exp(-(inhom_factor(s, 2.5) - inhom_factor(s, 0.7)))
    resid = x[:, 2] - decay * x[:, 1]
    assert abs(np.corrcoef(x[:, 1], resid)[0, 1]) < 4 / math.sqrt(x.shape[0])
    # mean by direct recursion of segment means
    m1 = 0.5 * (1 - math.exp(-0.3))
    m2 = 2.0 + (m1 - 2.0) * math.exp(-1.0 * 1.5)
    assert x[:, 2].mean() == pytest.approx(m2, abs=4 * x[:, 2].std() / math.sqrt(x.shape[0]))


@settings(deadline=None, max_examples=20)
@given(seed=st.integers(0, 2**31))
def test_sampler_deterministic(seed):
    bridge_ou = OuParams(kappa=0.2, theta=1.2, psi=0.4, x0=0.5)
    grid = np.linspace(0, 1, 5)
    a = ou_sample_path(bridge_ou, grid, np.random.default_rng(seed), 3)
    b = ou_sample_path(bridge_ou, grid, np.random.default_rng(seed), 3)
    assert np.array_equal(a, b)
