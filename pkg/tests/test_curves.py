"""TailIntegrals against brute-force nested quadrature."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from infocommodity.curves import RateCurve, TailIntegrals
from infocommodity.ou_core import OuParams, Schedule

SCHED = Schedule((2.0,), (0.15, 0.3), (0.5, 0.7), (0.15, 0.1))
CURVE = RateCurve((1.0,), (0.03, 0.05))


def _piecewise(bp, vals):
    return lambda s: vals[int(np.searchsorted(bp, s, side="right"))]


def _cumulative(bp, vals):
    """Exact running integral of a piecewise-constant function."""
    edges = np.array((0.0,) + tuple(bp))
    cum = np.concatenate(([0.0], np.cumsum(np.asarray(vals[:-1]) * np.diff(edges))))

    def F(t):
        i = int(np.searchsorted(bp, t, side="right"))
        return cum[i] + vals[i] * (t - edges[i])

    return F


class QuadOracle:
    def __init__(self, sched: Schedule, curve: RateCurve):
        self.k = _piecewise(sched.breakpoints, sched.kappa_vals)
        self.th = _piecewise(sched.breakpoints, sched.theta_vals)
        self.ps = _piecewise(sched.breakpoints, sched.psi_vals)
        self.R = _cumulative(curve.breakpoints, curve.rates)
        self.f = _cumulative(sched.breakpoints, sched.kappa_vals)
        self.pts = sorted(set(sched.breakpoints + curve.breakpoints))

    def _tail(self, g, a):
        pts = [p for p in self.pts if p > a]
        cut = (pts[-1] if pts else a) + 1.0
        head = quad(g, a, cut, points=pts or None, limit=200, epsabs=0, epsrel=1e-12)[0]
        return head + quad(g, cut, np.inf, limit=200, epsabs=0, epsrel=1e-12)[0]

    def P(self, t):
        return math.exp(-self.R(t))

    def scaled_delta(self, s):
        """``e^{f_s} delta_s`` with every exponent kept bounded."""
        fs = self.f(s)
        return self._tail(lambda u: math.exp(-self.R(u) - (self.f(u) - fs)), s)


@pytest.fixture(scope="module")
def oracle():
    return QuadOracle(SCHED, CURVE)


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 1.7, 2.0, 3.5])
def test_delta_and_p(oracle, t):
    tail = TailIntegrals(SCHED, CURVE).at(t)
    P = oracle.P(t)
    assert tail["P"] == pytest.approx(P, rel=1e-12)
    assert tail["f"] == pytest.approx(oracle.f(t), rel=1e-12, abs=1e-15)
    assert tail["delta_rel"] == pytest.approx(oracle.scaled_delta(t) / P, rel=1e-9)
    assert tail["p_rel"] == pytest.approx(oracle._tail(oracle.P, t) / P, rel=1e-9)


@pytest.mark.parametrize("t", [0.0, 0.8, 2.5])
def test_carry_and_info(oracle, t):
    tail = TailIntegrals(SCHED, CURVE).at(t)
    carry = oracle._tail(lambda s: oracle.k(s) * oracle.th(s) * oracle.scaled_delta(s), t)
    info = oracle._tail(lambda s: oracle.ps(s) ** 2 * oracle.scaled_delta(s) ** 2, t)
    assert tail["carry_rel"] == pytest.approx(carry / oracle.P(t), rel=1e-7)
    assert tail["info_var"] == pytest.approx(info, rel=1e-7)


def test_constant_case_closed_form():
    p = OuParams(kappa=0.15, theta=0.5, psi=0.15, x0=0.6)
    r, k = 0.05, 0.15
    for t in (0.0, 1.0, 40.0, 400.0):
        tail = TailIntegrals(Schedule.constant(p), RateCurve.constant(r)).at(t)
        assert tail["delta_rel"] == pytest.approx(1 / (r + k), rel=1e-13)
        assert tail["p_rel"] == pytest.approx(1 / r, rel=1e-13)
        assert tail["info_var"] == pytest.approx(p.psi**2 * math.exp(-2 * r * t) / (2 * r * (r + k) ** 2), rel=1e-13)


def test_rate_curve():
    c = RateCurve((1.0, 2.0), (0.01, 0.02, 0.04))
    assert c.discount(0.0) == 1.0
    assert c.discount(1.5) == pytest.approx(math.exp(-(0.01 + 0.5 * 0.02)))
    assert c.discount(3.0) == pytest.approx(math.exp(-(0.01 + 0.02 + 0.04)))
    with pytest.raises(ValueError):
        RateCurve((1.0,), (0.03, 0.0))
    with pytest.raises(ValueError):
        RateCurve((1.0,), (0.03,))
