"""Run every verification suite on each shipped config and print a summary table."""
import argparse
import dataclasses

from infocommodity.config import ModelConfig
from infocommodity.suites import SuiteSettings, run_suite

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seed", type=int, required=True)
ap.add_argument("--paths", type=int, default=200_000)
ap.add_argument("configs", nargs="*", default=["configs/bridge.json", "configs/option_surface.json"])
args = ap.parse_args()

settings = dataclasses.replace(SuiteSettings(), seed=args.seed, paths=args.paths)
for path in args.configs:
    rep = run_suite("all", ModelConfig.load(path).market_params(), settings)
    n_pass = sum(c.passed for c in rep.checks)
    print(f"{path}: {n_pass}/{len(rep.checks)} passed in {rep.runtime_seconds:.1f}s")
    for c in rep.checks:
        if not c.passed:
            print("  " + c.line())
