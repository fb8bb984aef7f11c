"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
Every stochastic command requires ``--seed``; output numbers use ``%.17g``.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import derivatives as dv
from .config import DEFAULT_CONFIG, ModelConfig
from .market_info import iter_joint_blocks
from .oracle import implied_initials, ou_fit
from .ou_core import TimeGrid
from .pricing import spot_path, spot_price, spot_price_general, spot_price_inhom
from .suites import SUITES, SuiteSettings, run_suite

log = logging.getLogger("infocommodity")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _load_config(args) -> ModelConfig:
    if args.config is None:
        return DEFAULT_CONFIG
    try:
        return ModelConfig.load(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from exc


def _require_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"{args.command} is stochastic: --seed is required")
    if args.seed < 0:
        raise UsageError("--seed must be >= 0")
    return args.seed


def _range(text: str, name: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"{name} must look like lo:hi, got {text!r}") from exc
    if not hi > lo:
        raise UsageError(f"{name} needs hi > lo")
    return lo, hi


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror}") from exc


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def cmd_price(args) -> int:
    cfg = _load_config(args)
    mp = cfg.market_params()
    x = cfg.x0 if args.x is None else args.x
    if cfg.schedule is not None:
        q = spot_price_inhom(cfg.schedule, cfg.curve(), cfg.sigma, args.t, x, args.xi)
    elif cfg.rate_curve is not None:
        q = spot_price_general(mp, args.t, x, args.xi, cfg.rate_curve)
    else:
        q = spot_price(mp, args.t, x, args.xi)
    _emit(_rows_to_csv(("t", "S", "annuity_term", "info_term"), [(q.t, q.S, q.annuity_term, q.info_term)]), args.out)
    if q.negative:
        print(f"warning: negative spot price S={_fmt(q.S)}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = _require_seed(args)
    cfg = _load_config(args)
    if cfg.schedule is not None or cfg.rate_curve is not None:
        raise UsageError("simulate supports constant parameters only; drop schedule/rate_curve")
    if args.paths < 1:
        raise UsageError("--paths must be >= 1")
    if args.out is None:
        raise UsageError("simulate needs --out")
    mp = cfg.market_params()
    grid = TimeGrid.from_spec(args.grid)
    try:
        fh = open(args.out, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc.strerror}") from exc
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_id", "t", "X", "B", "G", "xi", "omega", "S"])
        first = 0
        for blk in iter_joint_blocks(mp, grid, seed, args.paths):
            S = spot_path(blk, mp)
            for i in range(blk.n_paths):
                cols = (blk.t, blk.X[i], blk.B[i], blk.G[i], blk.xi[i], blk.omega[i], S[i])
                pid = str(first + i)
                w.writerows([pid, *map(_fmt, vals)] for vals in zip(*cols))
            first += blk.n_paths
    log.info("wrote %d paths x %d points to %s", args.paths, len(grid), args.out)
    return EXIT_OK


def cmd_option(args) -> int:
    cfg = _load_config(args)
    mp = cfg.market_params()
    if args.strike is None or not args.maturity:
        raise UsageError("option needs --strike and --maturity")
    rows = []
    for T in args.maturity:
        spec = dv.OptionSpec(args.strike, T, args.kind, args.futures_maturity)
        price, law = dv.price_option(mp, spec, exact=args.exact_futures)
        fut = "" if spec.futures_maturity is None else _fmt(spec.futures_maturity)
        rows.append((args.kind, args.strike, T, fut, price, law.mean, law.variance))
    header = ("kind", "strike", "maturity", "futures_maturity", "price", "mean", "variance")
    _emit(_rows_to_csv(header, rows), args.out)
    return EXIT_OK


def cmd_surface(args) -> int:
    cfg = _load_config(args)
    mp = cfg.market_params()
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    th_lo, th_hi = _range(args.theta_range, "--theta-range")
    t_lo, t_hi = _range(args.maturity_range, "--maturity-range")
    if t_lo < 0:
        raise UsageError("maturities must be >= 0")
    thetas = np.linspace(th_lo, th_hi, args.steps)
    # the lower maturity end is open: T = 0 has no information weight
    maturities = t_lo + (t_hi - t_lo) * np.arange(1, args.steps + 1) / args.steps
    rows = dv.call_surface(mp, args.strike, thetas, maturities)
    _emit(_rows_to_csv(("S0", "theta", "T", "call_price"), rows), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = _require_seed(args)
    cfg = _load_config(args)
    if cfg.schedule is not None or cfg.rate_curve is not None:
        raise UsageError("verify runs on the constant-parameter model; drop schedule/rate_curve")
    if args.suite not in SUITES + ("all",):
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES + ('all',))}")
    overrides = {"seed": seed}
    if args.paths is not None:
        if args.paths < 10:
            raise UsageError("--paths must be >= 10")
        overrides["paths"] = args.paths
    if args.sigmas is not None:
        if args.sigmas < 0:
            raise UsageError("--sigmas must be >= 0")
        overrides["sigmas"] = args.sigmas
    settings = dataclasses.replace(SuiteSettings(), **overrides)
    report = run_suite(args.suite, cfg.market_params(), settings)
    _emit(report.to_json(include_timing=args.timing) + "\n", args.out)
    print(report.summary(), file=sys.stderr)
    n_fail = sum(not c.passed for c in report.checks)
    print(f"{len(report.checks) - n_fail}/{len(report.checks)} checks passed", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def _read_series(path: str) -> np.ndarray:
    """Last column of a CSV file; a non-numeric first row is treated as a header."""
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise UsageError(f"{path} is empty")
    try:
        float(rows[0][-1])
    except ValueError:
        rows = rows[1:]
    try:
        return np.array([float(row[-1]) for row in rows])
    except ValueError as exc:
        raise UsageError(f"{path}: non-numeric value ({exc})") from exc


def cmd_calibrate(args) -> int:
    out: dict = {}
    if args.input is not None:
        if args.dt is None:
            raise UsageError("--input needs --dt")
        out.update(ou_fit(_read_series(args.input), args.dt).to_dict())
    if args.s0 is not None or args.s_inf is not None:
        if args.s0 is None or args.s_inf is None:
            raise UsageError("price-level inversion needs both --s0 and --s-inf")
        cfg = _load_config(args) if args.config else None
        r = args.r if args.r is not None else (cfg.r if cfg else None)
        kappa = args.kappa if args.kappa is not None else out.get("kappa", cfg.kappa if cfg else None)
        if r is None or kappa is None:
            raise UsageError("price-level inversion needs --r and --kappa (or a config / --input fit)")
        theta, x0 = implied_initials(args.s0, args.s_inf, r, kappa)
        out["implied"] = {"S0": args.s0, "S_inf": args.s_inf, "r": r, "kappa": kappa, "theta": theta, "x0": x0}
    if not out:
        raise UsageError("calibrate needs --input/--dt or --s0/--s-inf")
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="model config JSON (default: option-surface reference parameters)")
    common.add_argument("--out", help="output file (default: stdout where allowed)")
    common.add_argument("--seed", type=int, help="RNG seed; required by stochastic commands")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="infocommodity", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("price", parents=[common], help="spot price at (t, x, xi)")
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--x", type=float, help="dividend level (default: x0)")
    s.add_argument("--xi", type=float, default=0.0, help="information process value")
    s.set_defaults(func=cmd_price)

    s = sub.add_parser("simulate", parents=[common], help="joint path simulation to CSV")
    s.add_argument("--grid", default="0:1:0.01", help="start:end:step")
    s.add_argument("--paths", type=int, default=5)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("option", parents=[common], help="European call on spot or futures")
    s.add_argument("--kind", choices=("spot", "futures"), default="spot")
    s.add_argument("--strike", type=float, default=10.0)
    s.add_argument("--maturity", type=float, nargs="+")
    s.add_argument("--futures-maturity", type=float)
    s.add_argument("--exact-futures", action="store_true", help="use the exact conditional-expectation loading")
    s.set_defaults(func=cmd_option)

    s = sub.add_parser("surface", parents=[common], help="call price surface over (theta, T)")
    s.add_argument("--strike", type=float, default=10.0)
    s.add_argument("--theta-range", default="0.3:0.8")
    s.add_argument("--maturity-range", default="0:3")
    s.add_argument("--steps", type=int, default=26)
    s.set_defaults(func=cmd_surface)

    s = sub.add_parser("verify", parents=[common], help="run a Monte Carlo verification suite")
    s.add_argument("--suite", default="all")
    s.add_argument("--paths", type=int)
    s.add_argument("--sigmas", type=float, help="tolerance in standard errors (default 3)")
    s.add_argument("--timing", action="store_true", help="record runtime in the report")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("calibrate", parents=[common], help="OU fit and/or price-level inversion")
    s.add_argument("--input", help="CSV of evenly sampled dividend levels (last column)")
    s.add_argument("--dt", type=float)
    s.add_argument("--s0", type=float)
    s.add_argument("--s-inf", type=float)
    s.add_argument("--r", type=float)
    s.add_argument("--kappa", type=float)
    s.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
