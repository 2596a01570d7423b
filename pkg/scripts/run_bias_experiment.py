#!/usr/bin/env python3
"""Estimator bias/convergence experiment.

Desk scale by default (5 replicates, m up to 4096); pass --reps 20 for the
full-scale version. Writes bias_curves.csv and prints the per-m means.
"""

import argparse
import collections
import sys

import numpy as np

from mgembed.cli import main as cli_main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m-max", type=int, default=4096)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=20240817)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default="results/bias")
    args = ap.parse_args(argv)

    code = cli_main(["experiment-bias", "--m-max", str(args.m_max),
                     "--reps", str(args.reps), "--seed", str(args.seed),
                     "--workers", str(args.workers), "--out", args.out])
    if code != 0:
        return code

    table = collections.defaultdict(list)
    with open(f"{args.out}/bias_curves.csv", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            rep, m, k, bias, delta = line.rstrip("\n").split(",")
            table[(int(m), int(k))].append(
                (float(bias), float(delta) if delta else np.nan))
    print(f"{'m':>6} {'k':>2} {'mean bias':>10} {'mean delta':>10}")
    for (m, k), vals in sorted(table.items()):
        biases = [b for b, _ in vals]
        deltas = [d for _, d in vals if not np.isnan(d)]
        delta = f"{np.mean(deltas):10.4f}" if deltas else " " * 10
        print(f"{m:>6} {k:>2} {np.mean(biases):10.4f} {delta}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
