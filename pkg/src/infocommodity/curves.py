"""Piecewise-constant deterministic rate curves and the tail integrals built on them.

All infinite-horizon integrals are split at the merged breakpoints of the rate
curve and the dividend schedule. On the last (unbounded) segment every
integrand is a single exponential, so the tail is closed form; bounded
segments use Gauss-Legendre on short sub-pieces, which is exact to rounding
for the exponential sums that appear there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ou_core import Schedule, inhom_factor

__all__ = ["RateCurve", "TailIntegrals"]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_MAX_EXPONENT_SPAN = 2.0


@dataclass(frozen=True)
class RateCurve:
    """Short rate ``rates[i]`` on ``[breakpoints[i-1], breakpoints[i])``; last rate extends to infinity."""

    breakpoints: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        bp = tuple(float(b) for b in self.breakpoints)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "rates", rates)
        if len(rates) != len(bp) + 1:
            raise ValueError("rates needs len(breakpoints) + 1 entries")
        if not all(math.isfinite(v) for v in bp + rates):
            raise ValueError("rate curve values must be finite")
        if bp and (bp[0] <= 0 or any(a >= b for a, b in zip(bp, bp[1:]))):
            raise ValueError("breakpoints must be strictly increasing and positive")
        if rates[-1] <= 0:
            raise ValueError("the rate on the unbounded tail must be > 0 for the tail integrals to converge")

    @classmethod
    def constant(cls, r: float) -> "RateCurve":
        return cls((), (r,))

    def log_discount(self, t) -> np.ndarray:
        """``log P_t = -int_0^t r_s ds``."""
        t = np.asarray(t, dtype=float)
        edges = np.concatenate(([0.0], self.breakpoints))
        r = np.asarray(self.rates)
        cum = np.concatenate(([0.0], np.cumsum(r[:-1] * np.diff(edges))))
        i = np.searchsorted(np.asarray(self.breakpoints), t, side="right")
        return -(cum[i] + r[i] * (t - edges[i]))

    def discount(self, t):
        out = np.exp(self.log_discount(t))
        return float(out) if out.ndim == 0 else out


def _phi(rate: float, length):
    """``int_0^length exp(-rate x) dx``."""
    length = np.asarray(length, dtype=float)
    if rate == 0.0:
        return length
    return -np.expm1(-rate * length) / rate


class TailIntegrals:
    """Deterministic tail quantities for a schedule and a rate curve.

    Quantities are reported relative to the discount factor at the evaluation
    time so nothing overflows for large ``t``:

    * ``p_rel(t) = p_t / P_t``
    * ``delta_rel(t) = e^{f_t} delta_t / P_t`` (equals ``q_t / P_t`` for constant kappa)
    * ``carry_rel(t) = int_t^inf e^{f_s} kappa_s theta_s delta_s ds / P_t``
    * ``info_var(t) = int_t^inf e^{2 f_s} psi_s^2 delta_s^2 ds``
    """

    def __init__(self, schedule: Schedule, curve: RateCurve):
        edges = sorted(set((0.0,) + schedule.breakpoints + curve.breakpoints))
        self.starts = np.asarray(edges)
        self.ends = np.append(self.starts[1:], np.inf)
        s_idx = schedule.index(self.starts)
        c_idx = np.searchsorted(np.asarray(curve.breakpoints), self.starts, side="right")
        self.r = np.asarray(curve.rates)[c_idx]
        self.kappa = np.asarray(schedule.kappa_vals)[s_idx]
        self.theta = np.asarray(schedule.theta_vals)[s_idx]
        self.psi = np.asarray(schedule.psi_vals)[s_idx]
        self.lam = self.r + self.kappa
        self.curve = curve
        self.schedule = schedule
        if self.lam[-1] <= 0:
            raise ValueError("r + kappa must be > 0 on the unbounded tail")
        n = self.starts.size
        # backward recursion for values at segment starts
        self._delta_start = np.empty(n)
        self._p_start = np.empty(n)
        self._delta_start[-1] = 1.0 / self.lam[-1]
        self._p_start[-1] = 1.0 / self.r[-1]
        for k in range(n - 2, -1, -1):
            L = self.ends[k] - self.starts[k]
            self._delta_start[k] = _phi(self.lam[k], L) + math.exp(-self.lam[k] * L) * self._delta_start[k + 1]
            self._p_start[k] = _phi(self.r[k], L) + math.exp(-self.r[k] * L) * self._p_start[k + 1]
        # integrals from each segment start to infinity, relative to the discount at that start
        self._carry_start = np.empty(n)
        self._info_start = np.empty(n)
        last = n - 1
        self._carry_start[last] = self.kappa[last] * self.theta[last] / (self.r[last] * self.lam[last])
        self._info_start[last] = self.psi[last] ** 2 / (2.0 * self.r[last] * self.lam[last] ** 2)
        for k in range(n - 2, -1, -1):
            c, i = self._segment_quadrature(k, self.starts[k])
            L = self.ends[k] - self.starts[k]
            g = math.exp(-self.r[k] * L)
            self._carry_start[k] = c + g * self._carry_start[k + 1]
            self._info_start[k] = i + g * g * self._info_start[k + 1]

    def _segment(self, t) -> np.ndarray:
        return np.searchsorted(self.starts, np.asarray(t, dtype=float), side="right") - 1

    def _local(self, k: int, s):
        """Relative delta and p at points ``s`` inside bounded or tail segment ``k``."""
        if np.isinf(self.ends[k]):
            return np.full_like(s, 1.0 / self.lam[k]), np.full_like(s, 1.0 / self.r[k])
        rem = self.ends[k] - s
        d = _phi(self.lam[k], rem) + np.exp(-self.lam[k] * rem) * self._delta_start[k + 1]
        p = _phi(self.r[k], rem) + np.exp(-self.r[k] * rem) * self._p_start[k + 1]
        return d, p

    def _segment_quadrature(self, k: int, t0: float) -> tuple[float, float]:
        """``int_{t0}^{end_k}`` of the carry and info integrands, relative to ``P_{t0}``."""
        t1 = self.ends[k]
        span = max(abs(self.r[k]), abs(self.lam[k]), 1e-300) * 2.0 * (t1 - t0)
        m = max(1, int(math.ceil(span / _MAX_EXPONENT_SPAN)))
        edges = np.linspace(t0, t1, m + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        s = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        d, _ = self._local(k, s)
        disc = np.exp(-self.r[k] * (s - t0))
        carry = float(np.sum(w * self.kappa[k] * self.theta[k] * disc * d))
        info = float(np.sum(w * self.psi[k] ** 2 * (disc * d) ** 2))
        return carry, info

    def _eval(self, t: float) -> tuple[float, float, float, float]:
        if t < 0:
            raise ValueError("t must be >= 0")
        k = int(self._segment(t))
        d, p = self._local(k, np.asarray([t]))
        if np.isinf(self.ends[k]):
            # relative to P_t the tail integrals do not depend on t
            return float(d[0]), float(p[0]), self._carry_start[k], self._info_start[k]
        c, i = self._segment_quadrature(k, t)
        g = math.exp(-self.r[k] * (self.ends[k] - t))
        return float(d[0]), float(p[0]), c + g * self._carry_start[k + 1], i + g * g * self._info_start[k + 1]

    def at(self, t: float) -> dict:
        """All tail quantities at ``t`` plus ``f_t`` and ``P_t``."""
        d, p, c, i = self._eval(float(t))
        P = self.curve.discount(t)
        return {
            "t": float(t),
            "P": P,
            "f": inhom_factor(self.schedule, t),
            "p_rel": p,
            "delta_rel": d,
            "carry_rel": c,
            "info_var": i * P * P,
        }
