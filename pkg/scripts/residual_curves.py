#!/usr/bin/env python3
"""Residual ||y - A x^p|| over the iterations, default (eps, lam) rule.

    python scripts/residual_curves.py [--preset paper] [--out residual.csv]

The paper preset uses a 256 x 512 matrix with k = 70; desk uses 64 x 128, k = 18.
"""
import argparse
import sys

from ntot import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="desk", choices=["desk", "paper"])
    ap.add_argument("--seed", default="1")
    ap.add_argument("--out", default="residual_curves.csv")
    a = ap.parse_args()
    return cli.main(["sweep", "--study", "residual", "--preset", a.preset, "--seed", a.seed,
                     "--algos", "ntrot,ntrotp,nsiht,nshtp", "--lam", "5", "--out", a.out])


if __name__ == "__main__":
    sys.exit(main())
