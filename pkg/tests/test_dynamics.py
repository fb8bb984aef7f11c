import math

import numpy as np
import pytest

from infocommodity.dynamics import (
    dyn_state,
    innovations_path,
    martingale_path,
    sde_integrate,
    volatility_sigma,
    write_dynamics_csv,
)
from infocommodity.market_info import MarketParams, cond_variance, damping, discounted_dividend_integral, simulate_joint
from infocommodity.ou_core import TimeGrid
from infocommodity.pricing import spot_path


def test_volatility_limits(surface_mp):
    r, k = surface_mp.r, surface_mp.kappa
    mp0 = MarketParams.from_values(0.15, 0.5, 0.15, 0.6, 0.0, 0.05)
    assert volatility_sigma(mp0, 2.0) == pytest.approx(surface_mp.psi / (r + k), rel=1e-14)
    assert volatility_sigma(surface_mp, 0.0) == pytest.approx(
        surface_mp.psi * math.sqrt(4 * r * r * (r + k) ** 2 + surface_mp.sigma**2 * surface_mp.psi**2) / (2 * r * (r + k) ** 2)
    )
    t = 1.0
    expected = surface_mp.sigma * math.exp(r * t) * cond_variance(surface_mp, t) / damping(surface_mp, t)
    assert volatility_sigma(surface_mp, t) == pytest.approx(expected, rel=1e-12)


def test_martingale_identity(surface_mp):
    b = simulate_joint(surface_mp, TimeGrid.from_spec("0:2:0.5"), seed=1, n_paths=50)
    M = martingale_path(b, surface_mp)
    S = spot_path(b, surface_mp)
    running = discounted_dividend_integral(surface_mp, b.t[None, :], b.X, b.discounted_beta)
    np.testing.assert_allclose(M, np.exp(-surface_mp.r * b.t)[None, :] * S + running, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(M[:, 0], S[0, 0], rtol=1e-14)


def test_innovations_brownian(surface_mp):
    b = simulate_joint(surface_mp, TimeGrid.uniform(1.0, 200), seed=2, n_paths=4000)
    W = innovations_path(b, surface_mp)
    assert np.all(W[:, 0] == 0)
    n = W.shape[0]
    assert abs(W[:, -1].mean()) < 4 / math.sqrt(n)
    assert W[:, -1].var() == pytest.approx(1.0, abs=4 * math.sqrt(2 / n))
    dW = np.diff(W, axis=1)
    # increments over disjoint intervals are uncorrelated
    assert abs(np.corrcoef(dW[:, 10], dW[:, 150])[0, 1]) < 4 / math.sqrt(n)


def test_innovations_requires_noise():
    mp = MarketParams.from_values(0.15, 0.5, 0.15, 0.6, 0.0, 0.05)
    b = simulate_joint(mp, TimeGrid.uniform(1.0, 10), seed=1, n_paths=2)
    with pytest.raises(ValueError):
        innovations_path(b, mp)


def test_sde_converges_under_refinement(surface_mp):
    errs = []
    for n in (100, 1000, 10000):
        b = simulate_joint(surface_mp, TimeGrid.uniform(1.0, n), seed=3, n_paths=50)
        S_closed, S_sde, _ = sde_integrate(b, surface_mp, t0=0.01)
        errs.append(np.median(np.abs(S_sde[:, -1] - S_closed[:, -1]) / np.abs(S_closed[:, -1])))
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-4


def test_dyn_state_and_csv(tmp_path, surface_mp):
    b = simulate_joint(surface_mp, TimeGrid.uniform(1.0, 100), seed=4, n_paths=2)
    st = dyn_state(b, surface_mp, 1)
    assert st.S.shape == st.W.shape == st.M.shape == (101,)
    out = tmp_path / "d.csv"
    write_dynamics_csv(out, b, surface_mp, path_index=1)
    lines = out.read_text().splitlines()
    assert lines[0] == "t,S_closed,S_sde,W,M" and len(lines) == 102
