"""Price dynamics: volatility, pricing martingale, innovations process and an SDE check.

The innovations increments are built from the simulated ingredients (discounted
Brownian integral, noise Brownian motion, tail integral) with left-point
evaluation of every coefficient, which keeps them adapted.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .market_info import MarketParams, PathBundle, cond_variance, damping, weight_z
from .pricing import spot_path

__all__ = [
    "DynState",
    "volatility_sigma",
    "martingale_path",
    "innovations_path",
    "sde_integrate",
    "sde_terminal_errors",
    "sde_residual",
    "write_dynamics_csv",
]


@dataclass(frozen=True)
class DynState:
    t: np.ndarray
    S: np.ndarray
    W: np.ndarray
    M: np.ndarray
    Sigma: np.ndarray


def volatility_sigma(mp: MarketParams, t):
    """Absolute price volatility ``sigma e^{rt} V_t / D_t``.

    Evaluated in a form without ``1/sigma`` or ``1/t``; it tends to
    ``psi / (r + kappa)`` as ``sigma -> 0``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    r, k, s, psi = mp.r, mp.kappa, mp.sigma, mp.psi
    g = np.exp(r * t)
    denom = 2.0 * r * (r + k) ** 2 * g * g + s * s * psi * psi * t
    out = psi * g * np.sqrt(4.0 * r * r * (r + k) ** 2 * g * g + s * s * psi * psi) / denom
    return float(out) if out.ndim == 0 else out


def martingale_path(bundle: PathBundle, mp: MarketParams) -> np.ndarray:
    """``E[int_0^inf P_u X_u du | F_t]`` along each simulated path."""
    r, k = mp.r, mp.kappa
    info = (mp.sigma * cond_variance(mp, bundle.t))[None, :]  # z_t / (sigma t)
    return mp.psi / (r + k) * bundle.discounted_beta + info * bundle.omega + mp.level0


def innovations_path(bundle: PathBundle, mp: MarketParams) -> np.ndarray:
    """Innovations Brownian motion on the bundle grid, ``W_0 = 0``."""
    if mp.sigma * mp.psi == 0:
        raise ValueError("the innovations process needs sigma * psi > 0")
    r, k = mp.r, mp.kappa
    t = bundle.t[:-1]
    dt = np.diff(bundle.t)
    z = weight_z(mp, t)
    D = damping(mp, t)
    beta_load = 2.0 * r * (r + k) * np.exp(2.0 * r * t) / (mp.sigma * mp.psi)
    dJ = np.diff(bundle.discounted_beta, axis=1)
    dB = np.diff(bundle.B, axis=1)
    G, B = bundle.G[:, :-1], bundle.B[:, :-1]
    shrink = (1.0 - 2.0 * r * t) * (1.0 - z)
    # omega_t / t = sigma psi G_t / (r + k) + B_t / t; B_t / t is paired with a factor that vanishes at t = 0
    safe_t = np.where(t > 0, t, 1.0)
    b_term = np.where(t > 0, (shrink - 1.0) / safe_t, 0.0) * B
    drift = shrink * mp.sigma * mp.psi / (r + k) * G + b_term
    dW = D * (beta_load * dJ + drift * dt + dB)
    W = np.zeros_like(bundle.B)
    np.cumsum(dW, axis=1, out=W[:, 1:])
    return W


def _start_index(points: np.ndarray, t0: float) -> int:
    j = int(np.searchsorted(points, t0 - 1e-12))
    if j >= points.size - 1:
        raise ValueError("t0 must lie before the last grid point")
    return j


def sde_integrate(bundle: PathBundle, mp: MarketParams, t0: float = 0.01):
    """Euler integration of the price SDE from the first grid point ``>= t0``.

    Returns ``(S_closed, S_sde, W)``; before the start index ``S_sde`` copies
    the closed form.
    """
    pts = bundle.t
    j0 = _start_index(pts, t0)
    S_closed = spot_path(bundle, mp)
    W = innovations_path(bundle, mp)
    Sig = volatility_sigma(mp, pts)
    dt = np.diff(pts)
    dW = np.diff(W, axis=1)
    S = S_closed.copy()
    r = mp.r
    for j in range(j0, pts.size - 1):
        S[:, j + 1] = S[:, j] + (r * S[:, j] - bundle.X[:, j]) * dt[j] + Sig[j] * dW[:, j]
    return S_closed, S, W


def sde_terminal_errors(bundle: PathBundle, mp: MarketParams, t0: float = 0.01) -> np.ndarray:
    """Per-path ``|S_sde(T) - S_closed(T)|``."""
    S_closed, S, _ = sde_integrate(bundle, mp, t0)
    return np.abs(S[:, -1] - S_closed[:, -1])


def sde_residual(bundle: PathBundle, mp: MarketParams, t0: float = 0.01) -> float:
    return float(np.max(sde_terminal_errors(bundle, mp, t0)))


def dyn_state(bundle: PathBundle, mp: MarketParams, path_index: int = 0) -> DynState:
    return DynState(
        t=bundle.t,
        S=spot_path(bundle, mp)[path_index],
        W=innovations_path(bundle, mp)[path_index],
        M=martingale_path(bundle, mp)[path_index],
        Sigma=volatility_sigma(mp, bundle.t),
    )


def write_dynamics_csv(path, bundle: PathBundle, mp: MarketParams, t0: float = 0.01, path_index: int = 0) -> None:
    S_closed, S_sde, W = sde_integrate(bundle, mp, t0)
    M = martingale_path(bundle, mp)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "S_closed", "S_sde", "W", "M"])
        for j, t in enumerate(bundle.t):
            i = path_index
            w.writerow([f"{v:.17g}" for v in (t, S_closed[i, j], S_sde[i, j], W[i, j], M[i, j])])
