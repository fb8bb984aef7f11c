"""Independent Monte Carlo oracles for the projection formula, plus minimal calibration.

None of the oracles here call the pricing formulas they are meant to check:
the projection oracle samples the residual dividend integral and the scaled
noise from their own Gaussian laws, and the regression oracle integrates
freshly simulated future dividend paths by quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .market_info import MarketParams, weight_z
from .ou_core import OuParams, _transition_coeffs

__all__ = [
    "ProjectionSample",
    "RegressionResult",
    "CalibrationResult",
    "sample_projection",
    "projection_check",
    "regression_price_check",
    "ou_fit",
    "implied_initials",
]


@dataclass(frozen=True)
class ProjectionSample:
    """Residual discounted dividend integral ``A``, scaled noise ``C`` and ``A + C``."""

    A: np.ndarray
    C: np.ndarray

    @property
    def sum(self) -> np.ndarray:
        return self.A + self.C


def _rngs(seed, n: int) -> list[np.random.Generator]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in root.spawn(n)]


def sample_projection(mp: MarketParams, t: float, paths: int, seed) -> ProjectionSample:
    """Draw ``A_t`` and ``C_t = B_t / (sigma t)`` from independent streams."""
    if not t > 0:
        raise ValueError("t must be > 0")
    if mp.sigma == 0:
        raise ValueError("the scaled noise is undefined for sigma = 0")
    r, k = mp.r, mp.kappa
    disc = math.exp(-r * t)
    mean_a = mp.theta * (disc / r - disc / (r + k))
    sd_a = mp.psi * disc / ((r + k) * math.sqrt(2.0 * r))
    sd_c = 1.0 / (mp.sigma * math.sqrt(t))
    rng_a, rng_c = _rngs(seed, 2)
    return ProjectionSample(A=mean_a + sd_a * rng_a.standard_normal(paths), C=sd_c * rng_c.standard_normal(paths))


def projection_check(mp: MarketParams, t: float, paths: int, seed=0) -> tuple[float, float]:
    """OLS slope of ``A`` on ``A + C`` and the closed-form weight it should equal."""
    s = sample_projection(mp, t, paths, seed)
    y = s.sum
    yc = y - y.mean()
    slope = float(np.dot(yc, s.A - s.A.mean()) / np.dot(yc, yc))
    return slope, weight_z(mp, t)


@dataclass
class RegressionResult:
    t: float
    estimate: np.ndarray  # intercept, slope on X_t, slope on xi_t
    expected: np.ndarray
    stderr: np.ndarray
    paths: int

    @property
    def rel_error(self) -> np.ndarray:
        return np.abs(self.estimate - self.expected) / np.abs(self.expected)


def _future_grid(t: float, fine: float, fine_span: float, coarse: float, horizon: float) -> np.ndarray:
    a = t + np.arange(0.0, fine_span + 0.5 * fine, fine)
    b = np.arange(a[-1] + coarse, t + horizon + 0.5 * coarse, coarse)
    return np.concatenate((a, b))


def regression_price_check(
    mp: MarketParams,
    t: float,
    paths: int,
    seed=0,
    *,
    fine: float = 0.25,
    fine_span: float = 20.0,
    coarse: float = 1.0,
    horizon: float | None = None,
) -> RegressionResult:
    """Regress the realised discounted future dividends on ``(1, X_t, xi_t)``.

    ``X_t`` comes from the exact OU marginal; the future dividend path is
    re-simulated from ``X_t`` and integrated against the discount curve with
    the trapezoid rule out to ``horizon`` (default ``30 / r``), beyond which
    the remaining conditional mean is added. ``xi_t`` is then built from that
    realised integral and an independent noise draw, and the OLS coefficients
    are compared with the pricing-formula coefficients.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    if mp.sigma * mp.psi == 0:
        raise ValueError("regression needs sigma * psi > 0 (otherwise the design is singular)")
    r, k, th, psi = mp.r, mp.kappa, mp.theta, mp.psi
    horizon = 30.0 / r if horizon is None else horizon
    rng_x, rng_f, rng_b = _rngs(seed, 3)

    a0, sd0 = _transition_coeffs(k, th, psi, t)
    x_t = th + (mp.x0 - th) * a0 + sd0 * rng_x.standard_normal(paths)

    u = _future_grid(t, fine, fine_span, coarse, horizon)
    du = np.diff(u)
    a, sd = _transition_coeffs(k, th, psi, du)
    x = x_t.copy()
    f_prev = np.exp(-r * u[0]) * x
    integral = np.zeros(paths)
    for j in range(du.size):
        x = th + (x - th) * a[j] + sd[j] * rng_f.standard_normal(paths)
        f_next = np.exp(-r * u[j + 1]) * x
        integral += 0.5 * du[j] * (f_prev + f_next)
        f_prev = f_next
    u_end = u[-1]
    integral += math.exp(-r * u_end) * (th / r + (x - th) / (r + k))

    xi = mp.sigma * t * integral + math.sqrt(t) * rng_b.standard_normal(paths)
    design = np.column_stack((np.ones(paths), x_t, xi))
    coef, *_ = np.linalg.lstsq(design, integral, rcond=None)
    resid = integral - design @ coef
    s2 = float(resid @ resid) / (paths - 3)
    cov = s2 * np.linalg.inv(design.T @ design)

    z = weight_z(mp, t)
    disc = math.exp(-r * t)
    p, q = disc / r, disc / (r + k)
    expected = np.array([(1.0 - z) * th * (p - q), (1.0 - z) * q, z / (mp.sigma * t)])
    return RegressionResult(t=t, estimate=coef, expected=expected, stderr=np.sqrt(np.diag(cov)), paths=paths)


@dataclass
class CalibrationResult:
    ou: OuParams
    stderr: dict[str, float]
    loglik: float
    n_obs: int
    dt: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kappa": self.ou.kappa,
            "theta": self.ou.theta,
            "psi": self.ou.psi,
            "x0": self.ou.x0,
            "stderr": dict(self.stderr),
            "loglik": self.loglik,
            "n_obs": self.n_obs,
            "dt": self.dt,
            **self.extra,
        }


def ou_fit(series, dt: float) -> CalibrationResult:
    """Exact-discretisation maximum likelihood for an evenly sampled OU series.

    The transition is AR(1), ``x' = b + a x + e``, so the conditional MLE is
    OLS. Standard errors come from the OLS covariance and the delta method.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    prev, nxt = x[:-1], x[1:]
    n = prev.size
    design = np.column_stack((np.ones(n), prev))
    gram = design.T @ design
    if np.linalg.cond(gram) > 1e14 or np.ptp(prev) == 0:
        raise ValueError("series has no variation; it is not mean-reverting")
    b_hat, a_hat = np.linalg.solve(gram, design.T @ nxt)
    if not 0 < a_hat < 1:
        raise ValueError(f"AR coefficient {a_hat:.6g} is outside (0, 1); data are not mean-reverting")
    resid = nxt - b_hat - a_hat * prev
    s2 = float(resid @ resid) / n

    kappa = -math.log(a_hat) / dt
    theta = b_hat / (1.0 - a_hat)
    g = -math.log(a_hat) / (1.0 - a_hat**2)
    psi = math.sqrt(2.0 * s2 * g / dt)

    cov_ab = (float(resid @ resid) / max(n - 2, 1)) * np.linalg.inv(gram)  # order: b, a
    var_b, var_a, cov_ba = cov_ab[0, 0], cov_ab[1, 1], cov_ab[0, 1]
    se_kappa = math.sqrt(var_a) / (a_hat * dt)
    d_b, d_a = 1.0 / (1.0 - a_hat), b_hat / (1.0 - a_hat) ** 2
    se_theta = math.sqrt(max(d_b * d_b * var_b + d_a * d_a * var_a + 2.0 * d_a * d_b * cov_ba, 0.0))
    if psi > 0:
        dg = (-(1.0 - a_hat**2) / a_hat - 2.0 * a_hat * math.log(a_hat)) / (1.0 - a_hat**2) ** 2
        dpsi_da = psi * dg / (2.0 * g)
        dpsi_ds2 = psi / (2.0 * s2)
        se_psi = math.sqrt(dpsi_da**2 * var_a + dpsi_ds2**2 * 2.0 * s2 * s2 / n)
        loglik = -0.5 * n * (math.log(2.0 * math.pi * s2) + 1.0)
    else:
        se_psi, loglik = 0.0, math.inf
    return CalibrationResult(
        ou=OuParams(kappa=kappa, theta=theta, psi=psi, x0=float(x[0])),
        stderr={"kappa": se_kappa, "theta": se_theta, "psi": se_psi},
        loglik=loglik,
        n_obs=int(x.size),
        dt=float(dt),
    )


def implied_initials(S0: float, S_inf: float, r: float, kappa: float) -> tuple[float, float]:
    """Reversion level and initial dividend matching an initial and a long-run price.

    ``theta = r S_inf`` (the long-run expected price is ``theta / r``) and
    ``x0`` solves the time-0 pricing formula for ``S0``.
    """
    if r <= 0 or kappa <= 0:
        raise ValueError("r and kappa must be > 0")
    theta = r * S_inf
    x0 = ((r + kappa) * r * S0 - kappa * theta) / r
    return theta, x0
