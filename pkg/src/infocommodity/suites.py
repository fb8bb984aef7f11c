"""Verification suites: every closed form against an independent Monte Carlo estimate.

Each check records a statistic, the value it should equal, a standard error
and a tolerance; a check passes when ``|statistic - expected| <= tolerance``.
Monte Carlo tolerances are ``sigmas * se`` plus a tiny absolute floor that
only matters for degenerate (zero-variance) parameter sets.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import derivatives as dv
from .curves import RateCurve
from .dynamics import martingale_path, sde_integrate, volatility_sigma
from .market_info import (
    MarketParams,
    cond_variance,
    damping,
    discounted_dividend_integral,
    iter_joint_blocks,
    simulate_joint,
    weight_z,
    xi_omega_consistency,
)
from .oracle import projection_check, regression_price_check
from .ou_core import (
    Schedule,
    TimeGrid,
    bridge_moments,
    bridge_sample,
    ou_cov,
    ou_mean,
    ou_sample_path,
    sinh_ratio,
)
from .pricing import spot_path, spot_price, spot_price_general, spot_price_inhom

log = logging.getLogger(__name__)

SUITES = ("moments", "bridge", "projection", "spot_law", "sde", "martingale", "futures", "options")

__all__ = ["Check", "VerificationReport", "SuiteSettings", "SUITES", "run_suite"]


@dataclass
class Check:
    name: str
    statistic: float
    expected: float
    tolerance: float
    se: float
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        self.statistic = float(self.statistic)
        self.expected = float(self.expected)
        self.tolerance = float(self.tolerance)
        self.se = float(self.se)
        self.passed = bool(abs(self.statistic - self.expected) <= self.tolerance)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"{flag} {self.name}: stat={self.statistic:.12g} expected={self.expected:.12g} "
            f"tol={self.tolerance:.3g} se={self.se:.3g}"
        )


@dataclass
class VerificationReport:
    suite: str
    seed: int
    paths: int
    checks: list[Check]
    runtime_seconds: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, include_timing: bool = True) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "paths": self.paths,
            "checks": [
                {"name": c.name, "statistic": c.statistic, "expected": c.expected, "tolerance": c.tolerance, "se": c.se, "pass": c.passed}
                for c in self.checks
            ],
            "runtime_seconds": self.runtime_seconds if include_timing else None,
        }

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2)

    def summary(self) -> str:
        return "\n".join(c.line() for c in self.checks)


@dataclass(frozen=True)
class SuiteSettings:
    seed: int = 20240607
    paths: int = 200_000
    sigmas: float = 3.0
    times: tuple[float, ...] = (0.25, 1.0, 2.0)
    maturities: tuple[float, ...] = (0.5, 1.0, 2.0)
    strike: float = 10.0
    futures_pair: tuple[float, float] = (1.0, 2.0)
    bridge_T: float = 365.0
    bridge_paths: int = 100_000
    projection_paths: int = 1_000_000
    projection_rel_tol: float = 0.02
    regression_t: float = 5.0
    regression_paths: int = 500_000
    sde_paths: int = 1_000
    sde_dt: float = 1e-4
    sde_t0: float = 0.01
    sde_T: float = 1.0
    sde_rel_tol: float = 0.01
    gaussian_draws: int = 1_000_000


_FLOOR = 1e-9


class _Ctx:
    def __init__(self, mp: MarketParams, st: SuiteSettings):
        self.mp, self.st = mp, st
        self.checks: list[Check] = []

    def seed(self, *key: int) -> int:
        return int(np.random.SeedSequence(self.st.seed, spawn_key=key).generate_state(1)[0])

    def rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.st.seed, spawn_key=key))

    def mc(self, name: str, stat: float, expected: float, se: float) -> None:
        tol = self.st.sigmas * se + _FLOOR * max(1.0, abs(expected))
        self.checks.append(Check(name, stat, expected, tol, se))

    def exact(self, name: str, stat: float, expected: float, tol: float) -> None:
        self.checks.append(Check(name, stat, expected, tol, 0.0))

    def mean(self, name: str, sample: np.ndarray, expected: float) -> None:
        self.mc(name, sample.mean(), expected, sample.std(ddof=1) / math.sqrt(sample.size))

    def var(self, name: str, sample: np.ndarray, expected: float) -> None:
        c = sample - sample.mean()
        v = float(np.mean(c * c)) * sample.size / (sample.size - 1)
        m4 = float(np.mean(c**4))
        se = math.sqrt(max(m4 - v * v, 0.0) / sample.size)
        self.mc(name, v, expected, se)

    def cov(self, name: str, a: np.ndarray, b: np.ndarray, expected: float) -> None:
        prod = (a - a.mean()) * (b - b.mean())
        self.mc(name, prod.mean(), expected, prod.std(ddof=1) / math.sqrt(a.size))

    def uncorrelated(self, name: str, a: np.ndarray, b: np.ndarray) -> None:
        n = a.size
        corr = float(np.corrcoef(a, b)[0, 1]) if a.std() > 0 and b.std() > 0 else 0.0
        self.mc(name, corr, 0.0, 1.0 / math.sqrt(n))


def _suite_moments(c: _Ctx) -> None:
    p = c.mp.ou
    n = c.st.bridge_paths
    grid = np.array([0.0, 1.0, 2.0, 5.0, 10.0 / p.kappa + 5.0, 20.0 / p.kappa])
    x = ou_sample_path(p, grid, c.rng(1, 0), n)
    c.mean("moments/mean_t5", x[:, 3], ou_mean(p, 5.0))
    c.var("moments/var_t5", x[:, 3], ou_cov(p, 5.0, 5.0))
    c.cov("moments/cov_1_2", x[:, 1], x[:, 2], ou_cov(p, 1.0, 2.0))
    c.var("moments/var_long_run", x[:, 5], ou_cov(p, grid[5], grid[5]))
    c.uncorrelated("moments/orthogonal_increment", x[:, 2], x[:, 3] - math.exp(-p.kappa * 3.0) * x[:, 2])


def _suite_bridge(c: _Ctx) -> None:
    p, T = c.mp.ou, c.st.bridge_T
    m0, v0 = bridge_moments(p, 0.0, T)
    mT, vT = bridge_moments(p, T, T)
    c.exact("bridge/start_mean", m0, p.x0, 1e-12)
    c.exact("bridge/start_var", v0, 0.0, 1e-12)
    c.exact("bridge/end_mean", mT, 0.0, 1e-12)
    c.exact("bridge/end_var", vT, 0.0, 1e-12)
    grid = np.array([0.0, 0.25 * T, 0.5 * T, 0.75 * T, T])
    bs = bridge_sample(p, grid, c.rng(2, 0), c.st.bridge_paths)
    for j, label in ((1, "T/4"), (2, "T/2"), (3, "3T/4")):
        m, v = bridge_moments(p, grid[j], T)
        c.mean(f"bridge/mean_{label}", bs.value[:, j], m)
        c.var(f"bridge/var_{label}", bs.value[:, j], v)
    # the bridge component of an unconditioned path is independent of its endpoint
    x = ou_sample_path(p, grid, c.rng(2, 1), c.st.bridge_paths)
    b_mid = x[:, 2] - sinh_ratio(p.kappa * grid[2], p.kappa * T) * x[:, -1]
    c.uncorrelated("bridge/independent_of_terminal", b_mid, x[:, -1])


def _suite_projection(c: _Ctx) -> None:
    mp, st = c.mp, c.st
    if mp.sigma * mp.psi == 0:
        log.warning("projection suite skipped: sigma * psi = 0")
        return
    for i, t in enumerate(st.times):
        slope, z = projection_check(mp, t, st.projection_paths, c.seed(3, i))
        se = math.sqrt(max(1.0 - z, 0.0) / (st.projection_paths * z)) * z
        c.checks.append(Check(f"projection/slope_t{t:g}", slope, z, st.projection_rel_tol * z, se))
    # law of the residual dividend integral from the joint simulation
    t = st.times[len(st.times) // 2]
    b = simulate_joint(mp, [0.0, t], c.seed(3, 100), st.paths)
    r, k = mp.r, mp.kappa
    disc = math.exp(-r * t)
    A = mp.psi / (r + k) * b.G[:, 1] + disc * (k * mp.theta + r * b.X[:, 1]) / (r * (r + k)) - disc / (r + k) * b.X[:, 1]
    c.mean(f"projection/mean_A_t{t:g}", A, mp.theta * (disc / r - disc / (r + k)))
    c.var(f"projection/var_A_t{t:g}", A, mp.psi**2 * disc**2 / (2.0 * r * (r + k) ** 2))
    reg = regression_price_check(mp, st.regression_t, st.regression_paths, c.seed(3, 200))
    for label, est, exp, se in zip(("intercept", "slope_X", "slope_xi"), reg.estimate, reg.expected, reg.stderr):
        c.checks.append(Check(f"projection/regression_{label}_t{st.regression_t:g}", est, exp, st.projection_rel_tol * abs(exp), se))


def _suite_spot_law(c: _Ctx) -> None:
    mp, st = c.mp, c.st
    grid = np.concatenate(([0.0], sorted(set(st.maturities))))
    b = simulate_joint(mp, grid, c.seed(4, 0), st.paths)
    S = spot_path(b, mp)
    for j, T in enumerate(grid[1:], start=1):
        law = dv.spot_terminal_law(mp, T)
        c.mean(f"spot_law/mean_T{T:g}", S[:, j], law.mean)
        c.var(f"spot_law/var_T{T:g}", S[:, j], law.variance)
        c.var(f"spot_law/var_omega_T{T:g}", b.omega[:, j], T / (1.0 - weight_z(mp, T)))
    c.exact("spot_law/xi_omega_identity", xi_omega_consistency(b, mp), 0.0, 1e-9)
    c.exact("spot_law/S0", S[0, 0], spot_price(mp, 0.0, mp.x0, 0.0).S, 1e-12 * max(1.0, abs(S[0, 0])))
    c.exact(
        "spot_law/general_rate_reduction",
        spot_price_general(mp, grid[-1], b.X[0, -1], b.xi[0, -1], RateCurve.constant(mp.r)).S,
        S[0, -1],
        1e-12 * max(1.0, abs(S[0, -1])),
    )
    c.exact(
        "spot_law/inhomogeneous_reduction",
        spot_price_inhom(Schedule.constant(mp.ou), RateCurve.constant(mp.r), mp.sigma, grid[-1], b.X[0, -1], b.xi[0, -1]).S,
        S[0, -1],
        1e-10 * max(1.0, abs(S[0, -1])),
    )


def _suite_sde(c: _Ctx) -> None:
    mp, st = c.mp, c.st
    if mp.sigma * mp.psi == 0:
        log.warning("sde suite skipped: sigma * psi = 0")
        return
    n_steps = int(round(st.sde_T / st.sde_dt))
    grid = TimeGrid.uniform(st.sde_T, n_steps)
    rel, w_end = [], []
    for blk in iter_joint_blocks(mp, grid, c.seed(5, 0), st.sde_paths):
        S_closed, S_sde, W = sde_integrate(blk, mp, st.sde_t0)
        rel.append(np.abs(S_sde[:, -1] - S_closed[:, -1]) / np.abs(S_closed[:, -1]))
        w_end.append(W[:, -1])
    rel_all, w = np.concatenate(rel), np.concatenate(w_end)
    c.exact("sde/median_rel_terminal_error", float(np.median(rel_all)), 0.0, st.sde_rel_tol)
    c.mean(f"sde/mean_W_T{st.sde_T:g}", w, 0.0)
    c.var(f"sde/var_W_T{st.sde_T:g}", w, st.sde_T)


def _suite_martingale(c: _Ctx) -> None:
    mp, st = c.mp, c.st
    T = st.sde_T
    h = 1e-3
    t_mid = 0.5 * T
    grid = np.array([0.0, t_mid, t_mid + h, T])
    b = simulate_joint(mp, grid, c.seed(6, 0), st.paths)
    M = martingale_path(b, mp)
    c.mean(f"martingale/mean_M_T{T:g}_minus_M0", M[:, -1] - M[:, 0], 0.0)
    S = spot_path(b, mp)
    running = discounted_dividend_integral(mp, grid[None, :], b.X, b.discounted_beta)
    identity = np.max(np.abs(M - (np.exp(-mp.r * grid)[None, :] * S + running)))
    c.exact("martingale/value_identity", identity, 0.0, 1e-9)
    if mp.sigma * mp.psi > 0:
        # d<M>/dt versus (sigma V / D)^2 at t_mid, with a 5% relative tolerance
        inc = (M[:, 2] - M[:, 1]) / math.sqrt(h)
        qv = float(np.mean(inc * inc))
        target = (mp.sigma * cond_variance(mp, t_mid) / damping(mp, t_mid)) ** 2
        se = float(np.std(inc * inc, ddof=1) / math.sqrt(inc.size))
        c.checks.append(Check(f"martingale/quadratic_variation_rate_t{t_mid:g}", qv, target, 0.05 * target, se))
        sig = volatility_sigma(mp, t_mid)
        c.exact("martingale/volatility_consistency", sig * math.exp(-mp.r * t_mid), math.sqrt(target), 1e-12 * math.sqrt(target))


def _suite_futures(c: _Ctx) -> None:
    mp, st = c.mp, c.st
    t, T = st.futures_pair
    grid = np.array([0.0, t, T])
    b = simulate_joint(mp, grid, c.seed(7, 0), st.paths)
    F = dv.futures_price(mp, t, T, b.X[:, 1], b.omega[:, 1]).F
    F0 = dv.futures_price(mp, 0.0, T, mp.x0, 0.0).F
    law = dv.futures_terminal_law(mp, t, T)
    c.exact("futures/F0_equals_spot_mean", F0, dv.spot_terminal_law(mp, T).mean, 1e-12 * max(1.0, abs(F0)))
    c.mean(f"futures/mean_F_t{t:g}_T{T:g}", F, F0)
    c.var(f"futures/var_F_t{t:g}_T{T:g}", F, law.variance)
    F_ex = dv.futures_price(mp, t, T, b.X[:, 1], b.omega[:, 1], exact=True).F
    c.mean(f"futures/exact_mean_F_t{t:g}_T{T:g}", F_ex, F0)
    c.var(f"futures/exact_var_F_t{t:g}_T{T:g}", F_ex, dv.futures_terminal_law(mp, t, T, exact=True).variance)
    # E[S_T | X_t, omega_t]: regress realised S_T on (1, X_t, omega_t) and compare with the exact loadings
    S_T = spot_path(b, mp)[:, 2]
    if mp.sigma * mp.psi > 0:
        design = np.column_stack((np.ones(b.n_paths), b.X[:, 1], b.omega[:, 1]))
        coef, *_ = np.linalg.lstsq(design, S_T, rcond=None)
        resid = S_T - design @ coef
        cov = float(resid @ resid) / (b.n_paths - 3) * np.linalg.inv(design.T @ design)
        r, k = mp.r, mp.kappa
        e = math.exp(-k * (T - t))
        expected = ((r + k) * mp.theta - r * mp.theta * e) / (r * (r + k)), e / (r + k), dv.futures_info_coeff(mp, t, T, exact=True)
        for label, est, exp, var in zip(("intercept", "slope_X", "slope_omega"), coef, expected, np.diag(cov)):
            c.mc(f"futures/conditional_expectation_{label}", est, exp, math.sqrt(var))
    # maturity reductions
    F_TT = dv.futures_price(mp, T, T, b.X[:, 2], b.omega[:, 2]).F
    c.exact("futures/F_TT_equals_S_T", float(np.max(np.abs(F_TT - S_T))), 0.0, 1e-10 * max(1.0, float(np.max(np.abs(S_T)))))
    c.exact(
        "futures/loadings_agree_at_maturity",
        dv.futures_info_coeff(mp, T, T, exact=True),
        dv.futures_info_coeff(mp, T, T),
        1e-12 * max(1.0, abs(dv.futures_info_coeff(mp, T, T))),
    )
    v_ft, v_s = dv.futures_terminal_law(mp, T, T).variance, dv.spot_terminal_law(mp, T).variance
    c.exact("futures/var_at_maturity_equals_spot_var", v_ft, v_s, 1e-10 * max(1.0, v_s))


def _suite_options(c: _Ctx) -> None:
    mp, st = c.mp, c.st
    K = st.strike
    grid = np.concatenate(([0.0], sorted(set(st.maturities))))
    b = simulate_joint(mp, grid, c.seed(8, 0), st.paths)
    S = spot_path(b, mp)
    for j, T in enumerate(grid[1:], start=1):
        pay = math.exp(-mp.r * T) * np.maximum(S[:, j] - K, 0.0)
        c.mean(f"options/call_spot_K{K:g}_T{T:g}", pay, dv.call_on_spot(mp, dv.OptionSpec(K, T)))
    law = dv.spot_terminal_law(mp, grid[-1])
    if law.variance > 0:
        zdraw = law.mean + law.sd * c.rng(8, 1).standard_normal(st.gaussian_draws)
        df = math.exp(-mp.r * grid[-1])
        c.mean("options/gaussian_call_direct", df * np.maximum(zdraw - K, 0.0), dv.gaussian_call(law, K, df))
    t, T = st.futures_pair
    bf = simulate_joint(mp, np.array([0.0, t]), c.seed(8, 2), st.paths)
    F = dv.futures_price(mp, t, T, bf.X[:, 1], bf.omega[:, 1]).F
    pay = math.exp(-mp.r * t) * np.maximum(F - K, 0.0)
    spec = dv.OptionSpec(K, t, "futures", T)
    c.mean(f"options/call_futures_t{t:g}_T{T:g}", pay, dv.call_on_futures(mp, spec))
    c.exact(
        "options/futures_call_at_maturity_equals_spot_call",
        dv.call_on_futures(mp, dv.OptionSpec(K, T, "futures", T)),
        dv.call_on_spot(mp, dv.OptionSpec(K, T)),
        1e-12,
    )


_RUNNERS = {
    "moments": _suite_moments,
    "bridge": _suite_bridge,
    "projection": _suite_projection,
    "spot_law": _suite_spot_law,
    "sde": _suite_sde,
    "martingale": _suite_martingale,
    "futures": _suite_futures,
    "options": _suite_options,
}


def run_suite(name: str, mp: MarketParams, settings: SuiteSettings | None = None) -> VerificationReport:
    """Run one named suite (or ``"all"``); deterministic for fixed settings."""
    st = settings or SuiteSettings()
    if name != "all" and name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    ctx = _Ctx(mp, st)
    start = time.perf_counter()
    for suite in SUITES if name == "all" else (name,):
        log.info("running suite %s", suite)
        _RUNNERS[suite](ctx)
    return VerificationReport(
        suite=name, seed=st.seed, paths=st.paths, checks=ctx.checks, runtime_seconds=time.perf_counter() - start
    )


def settings_dict(st: SuiteSettings) -> dict:
    return asdict(st)
