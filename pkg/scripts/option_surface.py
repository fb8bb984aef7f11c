"""Call price surface over (S0, T) with S0 driven by theta in [0.3, 0.8].

Thin wrapper over the CLI `surface` command; prints basic shape diagnostics.
"""
import argparse
import csv

import numpy as np

from infocommodity.cli import main

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--config", default="configs/option_surface.json")
ap.add_argument("--steps", type=int, default=26)
ap.add_argument("--out", default="option_surface.csv")
args = ap.parse_args()

rc = main(["surface", "--config", args.config, "--steps", str(args.steps), "--out", args.out])
rows = np.array([[float(v) for v in r] for r in list(csv.reader(open(args.out)))[1:]])
price = rows[:, 3].reshape(args.steps, args.steps)
print(f"exit {rc}; price range [{price.min():.6g}, {price.max():.6g}]")
print("non-decreasing in S0 at every T:", bool(np.all(np.diff(price, axis=0) >= -1e-12)))
