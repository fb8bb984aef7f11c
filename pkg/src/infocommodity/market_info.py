"""Discounting, information weights and exact joint simulation of (X, xi).

The joint sampler works step by step on a time grid. Each step draws the
exact bivariate Gaussian of the OU innovation and of the discounted Brownian
integral ``int e^{-ru} dbeta_u``; a single extra Gaussian carries everything
beyond the last grid time, so nothing infinite-horizon is ever truncated.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import RateCurve, TailIntegrals
from .ou_core import OuParams, Schedule, TimeGrid

__all__ = [
    "MarketParams",
    "DiscountBundle",
    "PathBundle",
    "discount_bundle",
    "weight_z",
    "weight_z_general",
    "cond_variance",
    "simulate_joint",
    "iter_joint_blocks",
    "discounted_dividend_integral",
    "xi_omega_consistency",
    "BLOCK_PATHS",
]

# paths per independent random substream; fixed so results do not depend on worker count
BLOCK_PATHS = 256

_KAPPA_R_SWITCH = 1e-8


@dataclass(frozen=True)
class MarketParams:
    ou: OuParams
    sigma: float
    r: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and math.isfinite(self.r)):
            raise ValueError("sigma and r must be finite")
        if self.r <= 0:
            raise ValueError("r must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @classmethod
    def from_values(cls, kappa, theta, psi, x0, sigma, r) -> "MarketParams":
        return cls(OuParams(kappa=kappa, theta=theta, psi=psi, x0=x0), sigma=sigma, r=r)

    @property
    def kappa(self) -> float:
        return self.ou.kappa

    @property
    def theta(self) -> float:
        return self.ou.theta

    @property
    def psi(self) -> float:
        return self.ou.psi

    @property
    def x0(self) -> float:
        return self.ou.x0

    @property
    def level0(self) -> float:
        """Unconditional value of the discounted dividend stream, ``(r X_0 + kappa theta) / (r (r + kappa))``."""
        return (self.r * self.x0 + self.kappa * self.theta) / (self.r * (self.r + self.kappa))


@dataclass(frozen=True)
class DiscountBundle:
    t: float
    P: float
    p: float
    q: float
    z: float
    V: float
    D: float


def _check_t(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("t must be finite and >= 0")
    return t


def _annuity_denominator(mp: MarketParams, t):
    return 2.0 * mp.r * (mp.r + mp.kappa) ** 2 * np.exp(2.0 * mp.r * t)


def weight_z(mp: MarketParams, t):
    """Information weight for a constant short rate; 0 at ``t = 0``."""
    t = _check_t(t)
    b = mp.sigma**2 * mp.psi**2 * t
    out = b / (_annuity_denominator(mp, t) + b)
    return float(out) if out.ndim == 0 else out


def cond_variance(mp: MarketParams, t):
    """``V_t = z_t / (sigma^2 t)``, written so that ``sigma = 0`` and ``t = 0`` are regular."""
    t = _check_t(t)
    out = mp.psi**2 / (_annuity_denominator(mp, t) + mp.sigma**2 * mp.psi**2 * t)
    return float(out) if out.ndim == 0 else out


def damping(mp: MarketParams, t):
    t = _check_t(t)
    sp = mp.sigma * mp.psi
    out = sp / np.sqrt((2.0 * mp.r) ** 2 * (mp.r + mp.kappa) ** 2 * np.exp(2.0 * mp.r * t) + sp**2)
    return float(out) if out.ndim == 0 else out


def discount_bundle(mp: MarketParams, t: float) -> DiscountBundle:
    t = float(_check_t(t))
    P = math.exp(-mp.r * t)
    return DiscountBundle(
        t=t,
        P=P,
        p=P / mp.r,
        q=P / (mp.r + mp.kappa),
        z=weight_z(mp, t),
        V=cond_variance(mp, t),
        D=damping(mp, t),
    )


def weight_z_general(mp: MarketParams, t: float, curve: RateCurve | None = None) -> float:
    """Information weight under a piecewise-constant rate curve (``mp.r`` when ``curve`` is None)."""
    t = float(_check_t(t))
    curve = RateCurve.constant(mp.r) if curve is None else curve
    var_a = TailIntegrals(Schedule.constant(mp.ou), curve).at(t)["info_var"]
    b = mp.sigma**2 * t * var_a
    return b / (1.0 + b)


@dataclass(frozen=True)
class PathBundle:
    """Jointly simulated paths, each array shaped ``(n_paths, len(grid))``.

    ``discounted_beta`` is ``int_0^t e^{-ru} dbeta_u`` and ``G`` the tail
    ``int_t^inf e^{-ru} dbeta_u``.
    """

    grid: TimeGrid
    X: np.ndarray
    B: np.ndarray
    G: np.ndarray
    xi: np.ndarray
    omega: np.ndarray
    discounted_beta: np.ndarray
    seed: int | None = field(default=None, compare=False)

    @property
    def t(self) -> np.ndarray:
        return self.grid.points

    @property
    def n_paths(self) -> int:
        return self.X.shape[0]

    def to_csv(self, path, path_index: int = 0) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "X", "B", "G", "xi", "omega"])
            for j, t in enumerate(self.t):
                w.writerow(
                    [f"{v:.17g}" for v in (t, *(a[path_index, j] for a in (self.X, self.B, self.G, self.xi, self.omega)))]
                )


def _step_law(mp: MarketParams, t0: np.ndarray, t1: np.ndarray):
    """Per-step sds and loading for (OU innovation, discounted beta increment).

    Returns ``(sd_j, load, sd_resid)`` such that with independent standard
    normals ``Z1, Z2``: ``dJ = sd_j Z1`` and ``eps = load Z1 + sd_resid Z2``.
    """
    k, r, psi = mp.kappa, mp.r, mp.psi
    dt = t1 - t0
    unit_var_j = -np.expm1(-2.0 * r * dt) / (2.0 * r)
    var_x = psi**2 * -np.expm1(-2.0 * k * dt) / (2.0 * k)
    c = k - r
    if abs(c) < _KAPPA_R_SWITCH:
        integral = dt
    else:
        integral = -np.expm1(-c * dt) / c
    sd_j = np.exp(-r * t0) * np.sqrt(unit_var_j)
    # cov / sd_j with the common e^{-r t0} cancelled
    load = psi * np.exp(-r * dt) * integral / np.sqrt(unit_var_j)
    sd_resid = np.sqrt(np.maximum(var_x - load**2, 0.0))
    return sd_j, load, sd_resid


def _simulate_block(mp: MarketParams, pts: np.ndarray, n: int, ss: np.random.SeedSequence):
    rng = np.random.default_rng(ss)
    m = pts.size - 1
    z1 = rng.standard_normal((n, m))
    z2 = rng.standard_normal((n, m))
    zb = rng.standard_normal((n, m))
    zt = rng.standard_normal(n)

    k, th, r = mp.kappa, mp.theta, mp.r
    sd_j, load, sd_resid = _step_law(mp, pts[:-1], pts[1:])
    a = np.exp(-k * np.diff(pts))

    X = np.empty((n, m + 1))
    X[:, 0] = mp.x0
    eps = load * z1 + sd_resid * z2
    for j in range(m):
        X[:, j + 1] = th + (X[:, j] - th) * a[j] + eps[:, j]
    J = np.zeros((n, m + 1))
    np.cumsum(sd_j * z1, axis=1, out=J[:, 1:])
    B = np.zeros((n, m + 1))
    np.cumsum(np.sqrt(np.diff(pts)) * zb, axis=1, out=B[:, 1:])
    tail = math.exp(-r * pts[-1]) / math.sqrt(2.0 * r) * zt
    G = (J[:, -1:] - J) + tail[:, None]
    return X, B, G, J


def _assemble(mp: MarketParams, grid: TimeGrid, X, B, G, J, seed) -> PathBundle:
    r, k = mp.r, mp.kappa
    t = grid.points[None, :]
    scale = mp.sigma * t
    xi = scale * (np.exp(-r * t) * (k * mp.theta + r * X) / (r * (r + k)) + mp.psi / (r + k) * G) + B
    omega = scale * mp.psi / (r + k) * G + B
    return PathBundle(grid=grid, X=X, B=B, G=G, xi=xi, omega=omega, discounted_beta=J, seed=seed)


def _block_jobs(n_paths: int, seed: int):
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    sizes = [min(BLOCK_PATHS, n_paths - s) for s in range(0, n_paths, BLOCK_PATHS)]
    return [(n, np.random.SeedSequence(int(seed), spawn_key=(i,))) for i, n in enumerate(sizes)]


def _as_grid(grid) -> TimeGrid:
    return grid if isinstance(grid, TimeGrid) else TimeGrid(np.asarray(grid, dtype=float))


def iter_joint_blocks(mp: MarketParams, grid: TimeGrid, seed: int, n_paths: int):
    """Yield the paths of :func:`simulate_joint` block by block (bounded memory)."""
    grid = _as_grid(grid)
    for n, ss in _block_jobs(n_paths, seed):
        yield _assemble(mp, grid, *_simulate_block(mp, grid.points, n, ss), int(seed))


def simulate_joint(
    mp: MarketParams, grid: TimeGrid, seed: int, n_paths: int = 1, workers: int = 1
) -> PathBundle:
    """Exact joint sample of dividend, noise and information paths.

    Paths are generated in blocks of :data:`BLOCK_PATHS`; block ``i`` draws from
    ``SeedSequence(seed, spawn_key=(i,))``, so the output does not depend on
    ``workers``.
    """
    grid = _as_grid(grid)
    pts = grid.points
    jobs = _block_jobs(n_paths, seed)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda job: _simulate_block(mp, pts, *job), jobs))
    else:
        parts = [_simulate_block(mp, pts, *job) for job in jobs]
    X, B, G, J = (np.concatenate([p[i] for p in parts]) for i in range(4))
    return _assemble(mp, grid, X, B, G, J, int(seed))


def discounted_dividend_integral(mp: MarketParams, t, X, J):
    """``int_0^t e^{-ru} X_u du`` from the closed form in terms of ``X_t`` and ``J_t``."""
    r, k = mp.r, mp.kappa
    return mp.level0 + mp.psi / (r + k) * J - np.exp(-r * t) * (k * mp.theta + r * X) / (r * (r + k))


def xi_omega_consistency(bundle: PathBundle, mp: MarketParams) -> float:
    """Largest pathwise defect of the identity linking ``xi`` and ``omega``."""
    r, k = mp.r, mp.kappa
    t = bundle.t[None, :]
    running = discounted_dividend_integral(mp, t, bundle.X, bundle.discounted_beta)
    bracket = mp.level0 + mp.psi / (r + k) * bundle.discounted_beta - running
    resid = bundle.xi - bundle.omega - mp.sigma * t * bracket
    return float(np.max(np.abs(resid)))
