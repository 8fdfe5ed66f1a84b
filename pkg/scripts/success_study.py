#!/usr/bin/env python3
"""Success frequency against k/n with exact and with noisy (0.001) measurements.

    python scripts/success_study.py [--preset paper] [--workers 8]

Writes success_exact.csv and success_noisy.csv.
"""
import argparse
import sys

from ntot import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="desk", choices=["desk", "paper"])
    ap.add_argument("--seed", default="1")
    ap.add_argument("--workers", default="4")
    ap.add_argument("--points", default="12")
    ap.add_argument("--algos", default="ntrot,ntrotp,nsiht,nshtp,omp,sp")
    a = ap.parse_args()
    code = 0
    for noise, out in (("0", "success_exact.csv"), ("0.001", "success_noisy.csv")):
        code |= cli.main(["sweep", "--study", "success", "--noise", noise,
                          "--preset", a.preset, "--seed", a.seed, "--points", a.points,
                          "--workers", a.workers, "--algos", a.algos, "--out", out])
    return code


if __name__ == "__main__":
    sys.exit(main())
