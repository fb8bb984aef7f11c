"""Ornstein-Uhlenbeck dividend process: exact moments, transitions, bridges.

Everything here samples from exact Gaussian transition laws, so there is no
time-discretisation bias on any grid. Samplers take an explicit
``numpy.random.Generator``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OuParams",
    "Schedule",
    "TimeGrid",
    "BridgeState",
    "ou_mean",
    "ou_cov",
    "ou_transition_sample",
    "ou_sample_path",
    "bridge_moments",
    "bridge_sample",
    "sinh_ratio",
    "inhom_factor",
    "inhom_sample_path",
]


@dataclass(frozen=True)
class OuParams:
    """Parameters of ``dX = kappa (theta - X) dt + psi dbeta``, ``X_0 = x0``."""

    kappa: float
    theta: float
    psi: float
    x0: float

    def __post_init__(self) -> None:
        for name in ("kappa", "theta", "psi", "x0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.kappa <= 0:
            raise ValueError("kappa must be > 0")
        if self.psi < 0:
            raise ValueError("psi must be >= 0")

    @property
    def stationary_variance(self) -> float:
        return self.psi**2 / (2.0 * self.kappa)


@dataclass(frozen=True)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a time grid needs at least two points")
        if pts[0] != 0.0:
            raise ValueError("a time grid starts at 0")
        if not np.all(np.isfinite(pts)) or np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be finite and strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, t_max: float, n_steps: int) -> "TimeGrid":
        return cls(np.linspace(0.0, t_max, n_steps + 1))

    @classmethod
    def from_spec(cls, spec: str) -> "TimeGrid":
        """Parse ``"a:b:h"``; a point at 0 is prepended when ``a > 0``."""
        try:
            a, b, h = (float(v) for v in spec.split(":"))
        except ValueError as exc:
            raise ValueError(f"grid spec must look like start:end:step, got {spec!r}") from exc
        if a < 0 or b <= a or h <= 0:
            raise ValueError(f"invalid grid spec {spec!r}")
        n = int(round((b - a) / h))
        if n < 1 or not math.isclose(a + n * h, b, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(f"step {h} does not divide [{a}, {b}]")
        pts = a + h * np.arange(n + 1)
        pts[-1] = b
        if a > 0:
            pts = np.concatenate(([0.0], pts))
        return cls(pts)

    def __len__(self) -> int:
        return self.points.size

    @property
    def t_max(self) -> float:
        return float(self.points[-1])


@dataclass(frozen=True)
class BridgeState:
    """Sampled OU bridge ``b_{tT}`` on ``t``; shape ``(n_paths, len(t))``."""

    t: np.ndarray
    T: float
    value: np.ndarray


def _as_points(grid) -> np.ndarray:
    pts = grid.points if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    if pts.ndim != 1 or pts.size < 1:
        raise ValueError("grid must be a non-empty 1-d sequence of times")
    if pts[0] < 0 or np.any(np.diff(pts) <= 0):
        raise ValueError("grid must be non-negative and strictly increasing")
    return pts


def ou_mean(p: OuParams, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    decay = np.exp(-p.kappa * t)
    out = decay * p.x0 + p.theta * -np.expm1(-p.kappa * t)
    return float(out) if out.ndim == 0 else out


def ou_cov(p: OuParams, s, t):
    """``Cov[X_s, X_t]``; arguments are symmetrised."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    lo, hi = np.minimum(s, t), np.maximum(s, t)
    if np.any(lo < 0):
        raise ValueError("times must be >= 0")
    # e^{-k t}(e^{k s} - e^{-k s}) rewritten without overflow
    out = p.stationary_variance * np.exp(-p.kappa * (hi - lo)) * -np.expm1(-2.0 * p.kappa * lo)
    return float(out) if out.ndim == 0 else out


def _transition_coeffs(kappa: float, theta: float, psi: float, dt):
    """Exact AR(1) coefficients over ``dt``: ``X' = theta + (X - theta) a + sd * Z``."""
    a = np.exp(-kappa * dt)
    var = psi**2 * -np.expm1(-2.0 * kappa * dt) / (2.0 * kappa)
    return a, np.sqrt(var)


def ou_transition_sample(p: OuParams, x, dt: float, draw):
    if dt <= 0:
        raise ValueError("dt must be > 0")
    a, sd = _transition_coeffs(p.kappa, p.theta, p.psi, dt)
    return p.theta + (np.asarray(x, dtype=float) - p.theta) * a + sd * np.asarray(draw, dtype=float)


def ou_sample_path(p: OuParams, grid, rng: np.random.Generator, n_paths: int | None = None):
    """Exact OU path(s) on ``grid``.

    Returns shape ``(len(grid),)`` when ``n_paths`` is None, otherwise
    ``(n_paths, len(grid))``. A grid that starts after 0 gets its first value
    from the exact marginal at that time.
    """
    pts = _as_points(grid)
    n = 1 if n_paths is None else int(n_paths)
    draws = rng.standard_normal((n, pts.size))
    out = np.empty((n, pts.size))
    if pts[0] == 0.0:
        out[:, 0] = p.x0
    else:
        out[:, 0] = ou_mean(p, pts[0]) + math.sqrt(ou_cov(p, pts[0], pts[0])) * draws[:, 0]
    a, sd = _transition_coeffs(p.kappa, p.theta, p.psi, np.diff(pts))
    for j in range(pts.size - 1):
        out[:, j + 1] = p.theta + (out[:, j] - p.theta) * a[j] + sd[j] * draws[:, j + 1]
    return out[0] if n_paths is None else out


def sinh_ratio(a, b):
    """``sinh(a) / sinh(b)`` for ``0 <= a <= b``, ``b > 0``, stable at both ends."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.exp(a - b) * np.expm1(-2.0 * a) / np.expm1(-2.0 * b)


def bridge_moments(p: OuParams, t, T: float):
    """Mean and variance of the OU bridge ``b_{tT} = X_t - (sinh kt / sinh kT) X_T``."""
    if T <= 0:
        raise ValueError("T must be > 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > T):
        raise ValueError("need 0 <= t <= T")
    k = p.kappa
    r_left = sinh_ratio(k * (T - t), k * T)
    r_right = sinh_ratio(k * t, k * T)
    mean = r_left * p.x0 + (1.0 - r_right - r_left) * p.theta
    # cosh(kT) - cosh(k(T-2t)) = 2 sinh(kt) sinh(k(T-t))
    var = (
        p.stationary_variance
        * np.expm1(-2.0 * k * t)
        * np.expm1(-2.0 * k * (T - t))
        / -np.expm1(-2.0 * k * T)
    )
    var = np.where((t == 0) | (t == T), 0.0, var)
    if mean.ndim == 0:
        return float(mean), float(var)
    return mean, var


def bridge_sample(p: OuParams, grid, rng: np.random.Generator, n_paths: int = 1) -> BridgeState:
    """Pin a full exact OU path at its last grid time and subtract the sinh-weighted terminal value."""
    pts = _as_points(grid)
    if pts[0] != 0.0:
        raise ValueError("bridge grid must start at 0")
    T = float(pts[-1])
    x = ou_sample_path(p, pts, rng, n_paths)
    w = sinh_ratio(p.kappa * pts, p.kappa * T)
    b = x - w[None, :] * x[:, -1:]
    b[:, -1] = 0.0
    return BridgeState(t=pts, T=T, value=b)


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant ``kappa, theta, psi``.

    Value ``i`` applies on ``[breakpoints[i-1], breakpoints[i])`` with an
    implicit 0 before the first breakpoint; the last value extends to infinity,
    so every ``*_vals`` has ``len(breakpoints) + 1`` entries.
    """

    breakpoints: tuple[float, ...]
    kappa_vals: tuple[float, ...]
    theta_vals: tuple[float, ...]
    psi_vals: tuple[float, ...]

    def __post_init__(self) -> None:
        for name in ("breakpoints", "kappa_vals", "theta_vals", "psi_vals"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not all(math.isfinite(v) for v in vals):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, vals)
        bp = self.breakpoints
        n = len(bp) + 1
        if any(len(v) != n for v in (self.kappa_vals, self.theta_vals, self.psi_vals)):
            raise ValueError("each value list needs len(breakpoints) + 1 entries")
        if bp and (bp[0] <= 0 or any(b1 >= b2 for b1, b2 in zip(bp, bp[1:]))):
            raise ValueError("breakpoints must be strictly increasing and positive")
        if any(k <= 0 for k in self.kappa_vals):
            raise ValueError("kappa values must be > 0")
        if any(s < 0 for s in self.psi_vals):
            raise ValueError("psi values must be >= 0")

    @classmethod
    def constant(cls, p: OuParams) -> "Schedule":
        return cls((), (p.kappa,), (p.theta,), (p.psi,))

    def index(self, t) -> np.ndarray:
        return np.searchsorted(np.asarray(self.breakpoints), np.asarray(t, dtype=float), side="right")

    def segments(self, t0: float, t1: float) -> list[tuple[float, float, int]]:
        """Split ``[t0, t1]`` at breakpoints into ``(start, end, value_index)`` pieces."""
        cuts = [b for b in self.breakpoints if t0 < b < t1]
        edges = [t0, *cuts, t1]
        first = int(self.index(t0))
        return [(edges[i], edges[i + 1], first + i) for i in range(len(edges) - 1)]


def inhom_factor(s: Schedule, t):
    """``f_t``, the integral of the piecewise-constant reversion rate over ``[0, t]``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    edges = np.concatenate(([0.0], s.breakpoints))
    k = np.asarray(s.kappa_vals)
    cum = np.concatenate(([0.0], np.cumsum(k[:-1] * np.diff(edges)))) if edges.size > 1 else np.zeros(1)
    i = s.index(t)
    out = cum[i] + k[i] * (t - edges[i])
    return float(out) if out.ndim == 0 else out


def _inhom_step(s: Schedule, t0: float, t1: float) -> tuple[float, float, float]:
    """Compose per-segment exact transitions: ``X_t1 = a X_t0 + b + sd Z``."""
    a, b, var = 1.0, 0.0, 0.0
    for lo, hi, i in s.segments(t0, t1):
        k, th, ps = s.kappa_vals[i], s.theta_vals[i], s.psi_vals[i]
        ai, sdi = _transition_coeffs(k, th, ps, hi - lo)
        a, b, var = ai * a, ai * b + th * (1.0 - ai), ai * ai * var + sdi * sdi
    return a, b, math.sqrt(var)


def inhom_sample_path(
    s: Schedule, x0: float, grid, rng: np.random.Generator, n_paths: int | None = None
):
    """Exact sample of the time-inhomogeneous OU process on ``grid`` (which starts at 0).

    Uses one standard normal per grid step, drawn in the same order as
    :func:`ou_sample_path`, so a constant schedule reproduces the homogeneous
    sampler draw for draw.
    """
    pts = _as_points(grid)
    if pts[0] != 0.0:
        raise ValueError("grid must start at 0")
    n = 1 if n_paths is None else int(n_paths)
    draws = rng.standard_normal((n, pts.size))
    out = np.empty((n, pts.size))
    out[:, 0] = x0
    for j in range(pts.size - 1):
        t0, t1 = float(pts[j]), float(pts[j + 1])
        a, b, sd = _inhom_step(s, t0, t1)
        segs = s.segments(t0, t1)
        if len(segs) == 1:
            # same arithmetic as the homogeneous sampler
            th = s.theta_vals[segs[0][2]]
            out[:, j + 1] = th + (out[:, j] - th) * a + sd * draws[:, j + 1]
        else:
            out[:, j + 1] = a * out[:, j] + b + sd * draws[:, j + 1]
    return out[0] if n_paths is None else out
