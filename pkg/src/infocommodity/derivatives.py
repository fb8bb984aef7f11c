"""Gaussian closed forms for calls on spot, futures prices and calls on futures."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.special import ndtr

from .market_info import MarketParams, cond_variance, weight_z

__all__ = [
    "GaussianLaw",
    "OptionSpec",
    "FuturesQuote",
    "gaussian_call",
    "gaussian_put",
    "spot_terminal_law",
    "call_on_spot",
    "futures_info_coeff",
    "futures_price",
    "futures_terminal_law",
    "call_on_futures",
    "price_option",
    "call_surface",
    "write_surface_csv",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianLaw:
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not self.variance >= 0:
            raise ValueError("variance must be >= 0")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class OptionSpec:
    strike: float
    maturity: float
    underlying: Literal["spot", "futures"] = "spot"
    futures_maturity: float | None = None

    def __post_init__(self) -> None:
        if not self.maturity > 0:
            raise ValueError("maturity must be > 0")
        if self.underlying == "futures":
            if self.futures_maturity is None:
                raise ValueError("a futures option needs futures_maturity")
            if self.maturity > self.futures_maturity:
                raise ValueError("option maturity must not exceed the futures maturity")
        elif self.underlying != "spot":
            raise ValueError(f"unknown underlying {self.underlying!r}")


@dataclass(frozen=True)
class FuturesQuote:
    t: float
    T: float
    F: float | np.ndarray


def gaussian_call(law: GaussianLaw, K, df: float = 1.0):
    """Discounted ``E[(Z - K)^+]`` for ``Z ~ N(mean, variance)``."""
    if not 0 < df <= 1:
        raise ValueError("discount factor must lie in (0, 1]")
    K = np.asarray(K, dtype=float)
    m = law.mean - K
    if law.variance == 0:
        out = df * np.maximum(m, 0.0)
    else:
        sd = law.sd
        d = m / sd
        out = df * (sd * _INV_SQRT_2PI * np.exp(-0.5 * d * d) + m * ndtr(d))
    return float(out) if out.ndim == 0 else out


def gaussian_put(law: GaussianLaw, K, df: float = 1.0):
    """Put analogue by reflection: ``E[(K - Z)^+]`` is a call on ``-Z`` struck at ``-K``."""
    return gaussian_call(GaussianLaw(-law.mean, law.variance), -np.asarray(K, dtype=float), df)


def _spot_mean(mp: MarketParams, T: float) -> float:
    r, k = mp.r, mp.kappa
    ex = math.exp(-k * T) * mp.x0 + mp.theta * -math.expm1(-k * T)
    return (k * mp.theta + r * ex) / (r * (r + k))


def spot_terminal_law(mp: MarketParams, T: float) -> GaussianLaw:
    if not T > 0:
        raise ValueError("T must be > 0")
    r, k, psi = mp.r, mp.kappa, mp.psi
    z = weight_z(mp, T)
    info = mp.sigma * cond_variance(mp, T)  # z_T / (sigma T)
    var = (
        psi**2 * -math.expm1(-2.0 * k * T) / (2.0 * k * (r + k) ** 2)
        + z * z * psi**2 / (2.0 * r * (r + k) ** 2)
        + info * info * T * math.exp(2.0 * r * T)
    )
    return GaussianLaw(_spot_mean(mp, T), var)


def call_on_spot(mp: MarketParams, spec: OptionSpec) -> float:
    if spec.underlying != "spot":
        raise ValueError("call_on_spot needs a spot option")
    T = spec.maturity
    return gaussian_call(spot_terminal_law(mp, T), spec.strike, math.exp(-mp.r * T))


def _phi(a: float, L: float) -> float:
    """``int_0^L e^{-a u} du``, regular at ``a = 0``."""
    return L if abs(a) < 1e-12 else -math.expm1(-a * L) / a


def futures_info_coeff(mp: MarketParams, t: float, T: float, exact: bool = False) -> float:
    """Loading of the futures price on ``omega_t``.

    Default: ``e^{rT} z_T [z_t T + (1 - z_t) t] / (sigma t T)``, rewritten with
    ``z_T / (sigma T) = sigma V_T`` and ``z_t / t = sigma^2 V_t`` so that
    ``t = 0`` and ``sigma = 0`` are regular. This treats the dividend noise on
    ``(t, T]`` as uninformative given ``omega_t``.

    ``exact=True`` keeps the covariance between ``omega_t`` and that noise,
    giving ``E[S_T | X_t, omega_t]`` exactly:
    ``(1 - z_t) sigma psi^2 e^{-rT} [1/(2r) + int_0^{T-t} e^{-(kappa-r)u} du] / (r+kappa)^2``.
    The two agree at ``t = T``.
    """
    if exact:
        r, k = mp.r, mp.kappa
        return (
            (1.0 - weight_z(mp, t)) * mp.sigma * mp.psi**2 * math.exp(-r * T) / (r + k) ** 2
            * (0.5 / r + _phi(k - r, T - t))
        )
    return math.exp(mp.r * T) * mp.sigma * cond_variance(mp, T) * (
        mp.sigma**2 * cond_variance(mp, t) * T + 1.0 - weight_z(mp, t)
    )


def futures_price(mp: MarketParams, t: float, T: float, x, omega, exact: bool = False) -> FuturesQuote:
    t, T = float(t), float(T)
    if t < 0 or t > T:
        raise ValueError("need 0 <= t <= T")
    if t == 0 and np.any(np.asarray(omega) != 0):
        raise ValueError("omega must be 0 at t = 0")
    r, k = mp.r, mp.kappa
    x = np.asarray(x, dtype=float)
    carry = ((r + k) * mp.theta + r * (x - mp.theta) * math.exp(-k * (T - t))) / (r * (r + k))
    F = carry + futures_info_coeff(mp, t, T, exact) * np.asarray(omega, dtype=float)
    return FuturesQuote(t=t, T=T, F=float(F) if F.ndim == 0 else F)


def futures_terminal_law(mp: MarketParams, t: float, T: float, exact: bool = False) -> GaussianLaw:
    """Law at ``t`` of the futures price for delivery at ``T``.

    ``X_t`` and ``omega_t`` are independent with ``Var[omega_t] = t / (1 - z_t)``,
    so the variance is the sum of the two loadings squared times these variances.
    The information bracket uses ``z_t`` (not ``z_t^T``), the reading that makes
    ``t = T`` reproduce the terminal spot variance.
    """
    t, T = float(t), float(T)
    if not 0 < t <= T:
        raise ValueError("need 0 < t <= T")
    r, k, psi = mp.r, mp.kappa, mp.psi
    c = futures_info_coeff(mp, t, T, exact)
    var = (
        psi**2 * (math.exp(-2.0 * k * (T - t)) - math.exp(-2.0 * k * T)) / (2.0 * k * (r + k) ** 2)
        + c * c * t / (1.0 - weight_z(mp, t))
    )
    return GaussianLaw(_spot_mean(mp, T), var)


def call_on_futures(mp: MarketParams, spec: OptionSpec, exact: bool = False) -> float:
    if spec.underlying != "futures":
        raise ValueError("call_on_futures needs a futures option")
    t = spec.maturity
    law = futures_terminal_law(mp, t, spec.futures_maturity, exact)
    return gaussian_call(law, spec.strike, math.exp(-mp.r * t))


def price_option(mp: MarketParams, spec: OptionSpec, exact: bool = False) -> tuple[float, GaussianLaw]:
    if spec.underlying == "spot":
        law = spot_terminal_law(mp, spec.maturity)
    else:
        law = futures_terminal_law(mp, spec.maturity, spec.futures_maturity, exact)
    return gaussian_call(law, spec.strike, math.exp(-mp.r * spec.maturity)), law


def call_surface(mp: MarketParams, strike: float, thetas, maturities) -> list[tuple[float, float, float, float]]:
    """Rows ``(S0, theta, T, call_price)``; ``S0`` is the time-0 spot implied by each ``theta``."""
    rows = []
    for theta in thetas:
        m = MarketParams.from_values(mp.kappa, float(theta), mp.psi, mp.x0, mp.sigma, mp.r)
        s0 = m.level0
        for T in maturities:
            rows.append((s0, float(theta), float(T), call_on_spot(m, OptionSpec(strike, float(T)))))
    return rows


def write_surface_csv(path, rows) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["S0", "theta", "T", "call_price"])
        for row in rows:
            w.writerow([f"{v:.17g}" for v in row])
