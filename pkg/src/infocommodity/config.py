"""JSON model configuration: parse, validate, emit."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .curves import RateCurve
from .market_info import MarketParams
from .ou_core import Schedule

_SCALARS = ("kappa", "theta", "psi", "sigma", "r", "x0")
_SCHEDULE_KEYS = {"breakpoints", "kappa", "theta", "psi"}
_CURVE_KEYS = {"breakpoints", "rates"}


def _number(d: dict, key: str, where: str) -> float:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"{where}{key} must be a number")
    return float(v)


def _numbers(d: dict, key: str, where: str) -> tuple[float, ...]:
    v = d[key]
    if not isinstance(v, list) or any(isinstance(e, bool) or not isinstance(e, (int, float)) for e in v):
        raise ValueError(f"{where}{key} must be a list of numbers")
    return tuple(float(e) for e in v)


def _exact_keys(d, allowed: set[str], where: str) -> None:
    if not isinstance(d, dict):
        raise ValueError(f"{where or 'config'} must be a JSON object")
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unknown key(s) in {where or 'config'}: {', '.join(sorted(unknown))}")
    missing = allowed - set(d)
    if missing:
        raise ValueError(f"missing key(s) in {where or 'config'}: {', '.join(sorted(missing))}")


@dataclass(frozen=True)
class ModelConfig:
    kappa: float
    theta: float
    psi: float
    sigma: float
    r: float
    x0: float
    schedule: Schedule | None = None
    rate_curve: RateCurve | None = None

    def __post_init__(self) -> None:
        self.market_params()  # validates the scalar fields

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        if not isinstance(d, dict):
            raise ValueError("config must be a JSON object")
        unknown = set(d) - set(_SCALARS) - {"schedule", "rate_curve"}
        if unknown:
            raise ValueError(f"unknown key(s) in config: {', '.join(sorted(unknown))}")
        missing = set(_SCALARS) - set(d)
        if missing:
            raise ValueError(f"missing key(s) in config: {', '.join(sorted(missing))}")
        vals = {k: _number(d, k, "") for k in _SCALARS}
        schedule = curve = None
        if d.get("schedule") is not None:
            s = d["schedule"]
            _exact_keys(s, _SCHEDULE_KEYS, "schedule")
            schedule = Schedule(*(_numbers(s, k, "schedule.") for k in ("breakpoints", "kappa", "theta", "psi")))
        if d.get("rate_curve") is not None:
            c = d["rate_curve"]
            _exact_keys(c, _CURVE_KEYS, "rate_curve")
            curve = RateCurve(_numbers(c, "breakpoints", "rate_curve."), _numbers(c, "rates", "rate_curve."))
        return cls(**vals, schedule=schedule, rate_curve=curve)

    def to_dict(self) -> dict:
        out: dict = {k: getattr(self, k) for k in _SCALARS}
        if self.schedule is not None:
            s = self.schedule
            out["schedule"] = {
                "breakpoints": list(s.breakpoints),
                "kappa": list(s.kappa_vals),
                "theta": list(s.theta_vals),
                "psi": list(s.psi_vals),
            }
        if self.rate_curve is not None:
            out["rate_curve"] = {"breakpoints": list(self.rate_curve.breakpoints), "rates": list(self.rate_curve.rates)}
        return out

    @classmethod
    def loads(cls, text: str) -> "ModelConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def load(cls, path) -> "ModelConfig":
        return cls.loads(Path(path).read_text())

    def market_params(self) -> MarketParams:
        return MarketParams.from_values(self.kappa, self.theta, self.psi, self.x0, self.sigma, self.r)

    def curve(self) -> RateCurve:
        return self.rate_curve if self.rate_curve is not None else RateCurve.constant(self.r)


# Option-surface reference parameters; theta sits mid-range of 0.3-0.8.
DEFAULT_CONFIG = ModelConfig(kappa=0.15, theta=0.5, psi=0.15, sigma=0.25, r=0.05, x0=0.6)
