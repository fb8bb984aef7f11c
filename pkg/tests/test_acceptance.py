"""Acceptance criteria, each run at its stated tolerance.

Every test appends one PASS/FAIL line (with runtime) to the terminal summary.
Stochastic checks use fixed seeds, so outcomes are reproducible.
"""
import csv
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from infocommodity.cli import main
from infocommodity.curves import RateCurve
from infocommodity.market_info import MarketParams, weight_z
from infocommodity.oracle import projection_check
from infocommodity.ou_core import Schedule
from infocommodity.pricing import spot_price, spot_price_general, spot_price_inhom

ROOT = Path(__file__).resolve().parents[1]
BRIDGE = str(ROOT / "configs" / "bridge.json")
SURFACE = str(ROOT / "configs" / "option_surface.json")
CRUDE_BASE = json.loads((ROOT / "configs" / "crude_oil.json").read_text())
SEED = "20240607"


class Criterion:
    def __init__(self, name: str, budget: float | None = None):
        self.name, self.budget = name, budget
        self.notes: list[str] = []
        self.failures: list[str] = []

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def check(self, ok: bool, msg: str) -> None:
        (self.notes if ok else self.failures).append(msg)

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is not None:
            self.failures.append(f"raised {exc_type.__name__}: {exc}")
        if self.budget is not None and elapsed > self.budget:
            self.failures.append(f"runtime {elapsed:.1f}s exceeds {self.budget:g}s")
        flag = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures) if self.failures else "; ".join(self.notes[-3:])
        ACCEPTANCE_LINES.append(f"{flag} {self.name} ({elapsed:.1f}s): {detail}")
        print(ACCEPTANCE_LINES[-1])
        if exc_type is None:
            assert not self.failures, "; ".join(self.failures)
        return False


def _verify(tmp_path, suite: str, config: str, *extra: str) -> dict:
    out = tmp_path / f"{suite}.json"
    rc = main(["verify", "--suite", suite, "--config", config, "--seed", SEED, "--out", str(out), *extra])
    rep = json.loads(out.read_text())
    rep["exit_code"] = rc
    return rep


def _by_name(rep: dict) -> dict:
    return {c["name"]: c for c in rep["checks"]}


def _all_pass(c: Criterion, rep: dict, prefix: str = "") -> None:
    bad = [k["name"] for k in rep["checks"] if k["name"].startswith(prefix) and not k["pass"]]
    c.check(not bad, f"{prefix or rep['suite']} checks pass" if not bad else f"failed: {', '.join(bad)}")


def test_bridge_exactness(tmp_path):
    with Criterion("bridge exactness", budget=30) as c:
        rep = _verify(tmp_path, "bridge", BRIDGE)
        checks = _by_name(rep)
        for name in ("bridge/start_mean", "bridge/start_var", "bridge/end_mean", "bridge/end_var"):
            k = checks[name]
            c.check(abs(k["statistic"] - k["expected"]) <= 1e-12, f"{name} exact")
        _all_pass(c, rep)
        mid = checks["bridge/var_T/2"]
        c.check(abs(mid["expected"] - 0.4) < 1e-9, f"mid-path variance {mid['expected']:.12g}")
        c.check(abs(mid["statistic"] - 0.4) <= 3 * mid["se"], f"MC mid variance {mid['statistic']:.5f} +- {mid['se']:.1e}")
        c.check(rep["exit_code"] == 0, "exit 0")


def test_projection_weight_law():
    mp = MarketParams.from_values(0.15, 0.5, 0.15, 0.6, 0.25, 0.05)
    with Criterion("projection/weight law", budget=10) as c:
        z1 = weight_z(mp, 1.0)
        c.check(abs(z1 - 0.2413) < 5e-5, f"z(1) = {z1:.6f}")
        seeds = np.random.SeedSequence(int(SEED)).spawn(3)
        for t, ss in zip((0.25, 1.0, 2.0), seeds):
            slope, z = projection_check(mp, t, 1_000_000, ss)
            c.check(abs(slope - z) <= 0.02 * z, f"t={t:g}: slope {slope:.5f} vs z {z:.5f}")


def test_spot_law(tmp_path):
    with Criterion("spot law", budget=60) as c:
        mp = MarketParams.from_values(0.15, 0.5, 0.15, 0.6, 0.25, 0.05)
        from infocommodity.derivatives import spot_terminal_law

        m = spot_terminal_law(mp, 1.0).mean
        c.check(abs(m - 10.43036) < 1e-5, f"E[S_1] = {m:.7f}")
        rep = _verify(tmp_path, "spot_law", SURFACE)
        c.check(rep["paths"] == 200_000, "2e5 paths")
        for k in rep["checks"]:
            if k["name"].startswith(("spot_law/mean", "spot_law/var")):
                c.check(k["pass"] and math.isclose(k["tolerance"], 3 * k["se"] + 1e-9 * max(1, abs(k["expected"]))), k["name"])
        _all_pass(c, rep)


def test_option_oracle(tmp_path):
    with Criterion("option oracle") as c:
        rep = _verify(tmp_path, "options", SURFACE)
        checks = _by_name(rep)
        for T in ("0.5", "1", "2"):
            k = checks[f"options/call_spot_K10_T{T}"]
            c.check(k["pass"], f"T={T}: MC {k['statistic']:.5f} vs {k['expected']:.5f} (se {k['se']:.1e})")
        k = checks["options/gaussian_call_direct"]
        c.check(k["pass"], f"direct Gaussian MC {k['statistic']:.5f} vs {k['expected']:.5f}")
        _all_pass(c, rep)


def test_futures_consistency(tmp_path):
    with Criterion("futures consistency") as c:
        rep = _verify(tmp_path, "futures", SURFACE)
        checks = _by_name(rep)
        for name in ("futures/mean_F_t1_T2", "futures/var_F_t1_T2"):
            k = checks[name]
            c.check(k["pass"], f"{name}: {k['statistic']:.5f} vs {k['expected']:.5f}")
        for name in ("futures/F_TT_equals_S_T", "futures/var_at_maturity_equals_spot_var"):
            k = checks[name]
            c.check(abs(k["statistic"] - k["expected"]) <= 1e-10 * max(1.0, abs(k["expected"])), name)
        _all_pass(c, rep)


def test_sde_and_martingale(tmp_path):
    with Criterion("SDE / innovations / martingale", budget=300) as c:
        rep = _verify(tmp_path, "sde", SURFACE)
        checks = _by_name(rep)
        med = checks["sde/median_rel_terminal_error"]
        c.check(med["statistic"] < 0.01, f"median rel error {med['statistic']:.2e}")
        w = checks["sde/var_W_T1"]
        c.check(w["pass"], f"Var W_1 = {w['statistic']:.4f} +- {w['se']:.3f}")
        mrep = _verify(tmp_path, "martingale", SURFACE)
        m = _by_name(mrep)["martingale/mean_M_T1_minus_M0"]
        c.check(m["pass"], f"E[M_1] - M_0 = {m['statistic']:.2e} (se {m['se']:.1e})")
        _all_pass(c, rep)


def test_reductions():
    with Criterion("reductions") as c:
        worst_g = worst_i = 0.0
        rng = np.random.default_rng(int(SEED))
        for sigma in (0.0, 0.25, 2.0):
            mp = MarketParams.from_values(0.15, 0.5, 0.15, 0.6, sigma, 0.05)
            sched, curve = Schedule.constant(mp.ou), RateCurve.constant(mp.r)
            for t in (0.0, 0.01, 0.5, 1.0, 3.0, 25.0):
                x, xi = rng.normal(0.5, 0.3), 0.0 if t == 0 else rng.normal(0, 2)
                base = spot_price(mp, t, x, xi).S
                scale = max(1.0, abs(base))
                worst_g = max(worst_g, abs(spot_price_general(mp, t, x, xi, curve).S - base) / scale)
                worst_i = max(worst_i, abs(spot_price_inhom(sched, curve, sigma, t, x, xi).S - base) / scale)
        c.check(worst_g <= 1e-12, f"general-rate max rel diff {worst_g:.1e}")
        c.check(worst_i <= 1e-10, f"inhomogeneous max rel diff {worst_i:.1e}")


def _surface(tmp_path, name, *extra):
    out = tmp_path / name
    assert main(["surface", "--config", SURFACE, "--out", str(out), *extra]) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    return rows


def test_reference_outputs(tmp_path):
    with Criterion("reference outputs") as c:
        eps = 1e-4
        base = _surface(tmp_path, "s.csv")
        lo = _surface(tmp_path, "lo.csv", "--strike", str(10 - eps))
        hi = _surface(tmp_path, "hi.csv", "--strike", str(10 + eps))
        price = base[:, 3]
        c.check(bool(np.all(price >= 0)), f"non-negative (min {price.min():.2e})")
        c.check(bool(np.all(hi[:, 3] <= price) and np.all(price <= lo[:, 3])), "non-increasing in K at K +- 1e-4")
        c.check(bool(base[:, 1].min() == 0.3 and base[:, 1].max() == 0.8 and base[:, 2].max() == 3.0 and base[:, 2].min() > 0), "surface grid ranges")
        # continuity: refining the grid shrinks the largest jump between neighbouring cells
        fine = _surface(tmp_path, "f.csv", "--steps", "51")
        jumps = []
        for rows, n in ((base, 26), (fine, 51)):
            g = rows[:, 3].reshape(n, n)
            jumps.append(max(np.abs(np.diff(g, axis=0)).max(), np.abs(np.diff(g, axis=1)).max()))
        c.check(jumps[1] < 0.6 * jumps[0], f"max neighbour jump {jumps[0]:.4f} -> {jumps[1]:.4f}")

        cal = tmp_path / "cal.json"
        assert main(["calibrate", "--s0", "62.78", "--s-inf", "60", "--r", "0.025", "--kappa", "0.05", "--out", str(cal)]) == 0
        implied = json.loads(cal.read_text())["implied"]
        c.check(abs(implied["theta"] - 1.5) < 1e-12 and abs(implied["x0"] - 1.7085) < 1e-4, f"x0 = {implied['x0']:.6f}")
        cfg = tmp_path / "crude_oil.json"
        cfg.write_text(json.dumps({**CRUDE_BASE, "theta": implied["theta"], "x0": implied["x0"]}))
        sim = tmp_path / "paths.csv"
        args = ["simulate", "--config", str(cfg), "--grid", f"0:1.5:{1 / 252!r}", "--paths", "1000", "--seed", SEED]
        assert main([*args, "--out", str(sim)]) == 0
        S = np.loadtxt(sim, delimiter=",", skiprows=1, usecols=7)
        mean = float(S.mean())
        c.check(abs(mean / 60.0 - 1.0) <= 0.05, f"long-run sample mean {mean:.3f} (S_inf 60)")


def test_determinism(tmp_path):
    cfg = SURFACE
    commands = {
        "price": ["price", "--config", cfg, "--t", "1", "--xi", "0.4"],
        "simulate": ["simulate", "--config", cfg, "--grid", "0:1:0.05", "--paths", "300", "--seed", "5"],
        "option": ["option", "--config", cfg, "--kind", "futures", "--maturity", "0.5", "1", "--futures-maturity", "2"],
        "surface": ["surface", "--config", cfg, "--steps", "10"],
        "verify": ["verify", "--config", cfg, "--suite", "futures", "--paths", "20000", "--seed", "5"],
        "calibrate": ["calibrate", "--input", str(ROOT / "data" / "synthetic_dividend.csv"), "--dt", "1"],
    }
    with Criterion("determinism") as c:
        for name, argv in commands.items():
            outs = []
            for rep in range(2):
                out = tmp_path / f"{name}{rep}"
                main([*argv, "--out", str(out)])
                outs.append(out.read_bytes())
            c.check(outs[0] == outs[1] and len(outs[0]) > 0, f"{name} identical")
