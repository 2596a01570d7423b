#!/usr/bin/env python3
"""Numeric check of the one-component bias bound on homogeneous graphs."""

import argparse
import sys

from mgembed.cli import main as cli_main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--m", type=int, default=1024)
    ap.add_argument("--seeds", default="1,2,3")
    ap.add_argument("--out", default="results/bound")
    args = ap.parse_args(argv)
    for seed in args.seeds.split(","):
        code = cli_main(["bound-check", "--n", str(args.n), "--p", str(args.p),
                         "--m", str(args.m), "--seed", seed.strip(),
                         "--out", f"{args.out}/seed_{seed.strip()}"])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
