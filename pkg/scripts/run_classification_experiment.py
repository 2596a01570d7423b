#!/usr/bin/env python3
"""Graph-classification benchmark: six feature extractions, 1-NN each.

Desk scale by default; the full sweep of the original study is
--m-list 4,8,16,32,64,128,200 --reps 100.
"""

import argparse
import collections
import sys

import numpy as np

from mgembed.cli import main as cli_main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m-list", default="4,8,16,32,64,128,200")
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=20240817)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default="results/classify")
    args = ap.parse_args(argv)

    code = cli_main(["experiment-classify", "--m-list", args.m_list,
                     "--reps", str(args.reps), "--seed", str(args.seed),
                     "--workers", str(args.workers), "--out", args.out])
    if code != 0:
        return code

    acc = collections.defaultdict(list)
    with open(f"{args.out}/accuracy.csv", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            method, m, rep, a = line.rstrip("\n").split(",")
            acc[(int(m), method)].append(float(a))
    methods = sorted({meth for _, meth in acc})
    print(f"{'m':>6} " + " ".join(f"{meth:>6}" for meth in methods))
    for m in sorted({m for m, _ in acc}):
        row = " ".join(f"{np.mean(acc[(m, meth)]):6.3f}" for meth in methods)
        print(f"{m:>6} {row}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
