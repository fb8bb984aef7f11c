"""Spot price from the current dividend level and the information value.

Three variants share one contract: constant short rate, piecewise-constant
rate curve, and piecewise-constant dividend schedule. Prices may be negative
(the model is Gaussian); quotes flag this instead of clamping.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curves import RateCurve, TailIntegrals
from .market_info import MarketParams, PathBundle, cond_variance, weight_z
from .ou_core import Schedule

__all__ = [
    "SpotQuote",
    "ScheduleBundle",
    "spot_price",
    "spot_price_general",
    "spot_price_inhom",
    "schedule_bundle",
    "spot_path",
    "write_quotes_csv",
]


@dataclass(frozen=True)
class SpotQuote:
    t: float
    S: float | np.ndarray
    annuity_term: float | np.ndarray
    info_term: float | np.ndarray

    @property
    def negative(self) -> bool:
        return bool(np.any(np.asarray(self.S) < 0))


@dataclass(frozen=True)
class ScheduleBundle:
    t: float
    f: float
    delta: float
    z: float


def _scalar_or_array(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def _quote(t: float, annuity, info) -> SpotQuote:
    annuity, info = np.asarray(annuity, dtype=float), np.asarray(info, dtype=float)
    return SpotQuote(t=t, S=_scalar_or_array(annuity + info), annuity_term=_scalar_or_array(annuity), info_term=_scalar_or_array(info))


def _check_inputs(t: float, xi) -> None:
    if not math.isfinite(t) or t < 0:
        raise ValueError("t must be finite and >= 0")
    if t == 0 and np.any(np.asarray(xi) != 0):
        raise ValueError("the information process starts at 0; xi must be 0 at t = 0")


def spot_price(mp: MarketParams, t: float, x, xi) -> SpotQuote:
    """Spot price under a constant short rate.

    The information coefficient ``z_t e^{rt} / (sigma t)`` is evaluated as
    ``sigma V_t e^{rt}``, which is finite at ``t = 0`` and for ``sigma = 0``.
    """
    t = float(t)
    _check_inputs(t, xi)
    r, k = mp.r, mp.kappa
    z = weight_z(mp, t)
    annuity = (1.0 - z) * (k * mp.theta + r * np.asarray(x, dtype=float)) / (r * (r + k))
    info = mp.sigma * cond_variance(mp, t) * math.exp(r * t) * np.asarray(xi, dtype=float)
    return _quote(t, annuity, info)


def spot_price_general(mp: MarketParams, t: float, x, xi, curve: RateCurve | None = None) -> SpotQuote:
    """Spot price under a piecewise-constant short-rate curve."""
    t = float(t)
    _check_inputs(t, xi)
    curve = RateCurve.constant(mp.r) if curve is None else curve
    tail = TailIntegrals(Schedule.constant(mp.ou), curve).at(t)
    var_a = tail["info_var"]
    b = mp.sigma**2 * t * var_a
    z = b / (1.0 + b)
    x = np.asarray(x, dtype=float)
    annuity = (1.0 - z) * (mp.theta * tail["p_rel"] + tail["delta_rel"] * (x - mp.theta))
    # z / (sigma t) = sigma var_a / (1 + b)
    info = mp.sigma * var_a / (1.0 + b) / tail["P"] * np.asarray(xi, dtype=float)
    return _quote(t, annuity, info)


def schedule_bundle(schedule: Schedule, curve: RateCurve, sigma: float, t: float) -> ScheduleBundle:
    tail = TailIntegrals(schedule, curve).at(t)
    b = sigma**2 * t * tail["info_var"]
    delta = tail["delta_rel"] * tail["P"] * math.exp(-tail["f"])
    return ScheduleBundle(t=float(t), f=tail["f"], delta=delta, z=b / (1.0 + b))


def spot_price_inhom(schedule: Schedule, curve: RateCurve, sigma: float, t: float, x, xi) -> SpotQuote:
    """Spot price with piecewise-constant reversion rate, level and dividend volatility."""
    t = float(t)
    _check_inputs(t, xi)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    tail = TailIntegrals(schedule, curve).at(t)
    var_a = tail["info_var"]
    b = sigma**2 * t * var_a
    z = b / (1.0 + b)
    x = np.asarray(x, dtype=float)
    annuity = (1.0 - z) * (tail["carry_rel"] + tail["delta_rel"] * x)
    info = sigma * var_a / (1.0 + b) / tail["P"] * np.asarray(xi, dtype=float)
    return _quote(t, annuity, info)


def spot_path(bundle: PathBundle, mp: MarketParams) -> np.ndarray:
    """Closed-form spot price at every grid point of every simulated path."""
    r, k = mp.r, mp.kappa
    z = weight_z(mp, bundle.t)[None, :]
    coeff = (mp.sigma * cond_variance(mp, bundle.t) * np.exp(r * bundle.t))[None, :]
    return (1.0 - z) * (k * mp.theta + r * bundle.X) / (r * (r + k)) + coeff * bundle.xi


def write_quotes_csv(path, quotes) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "S", "annuity_term", "info_term"])
        for q in quotes:
            w.writerow([f"{q.t:.17g}", f"{float(q.S):.17g}", f"{float(q.annuity_term):.17g}", f"{float(q.info_term):.17g}"])
