#!/usr/bin/env python3
"""Residual curves of NTROTP for several eps (lam = 10) and several lam (eps = s1^2 + 1).

    python scripts/parameter_sweeps.py [--preset paper]

Writes eps_sweep.csv and lam_sweep.csv.
"""
import argparse
import sys

from ntot import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="desk", choices=["desk", "paper"])
    ap.add_argument("--seed", default="1")
    ap.add_argument("--algos", default="ntrotp")
    a = ap.parse_args()
    code = 0
    for which, out in (("epsilon", "eps_sweep.csv"), ("lambda", "lam_sweep.csv")):
        code |= cli.main(["sweep", "--study", "residual", "--residual-sweep", which,
                          "--preset", a.preset, "--seed", a.seed, "--algos", a.algos,
                          "--out", out])
    return code


if __name__ == "__main__":
    sys.exit(main())
