#!/usr/bin/env python3
"""Average iterations to reach relative error 1e-3 (cap 50) against k/n and m/n.

    python scripts/iteration_study.py [--preset paper] [--workers 8]

Writes iterations_k_over_n.csv and iterations_m_over_n.csv.  Trials that never reach
the tolerance count as 50 iterations.
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
    a = ap.parse_args()
    code = 0
    for axis, out in (("k_over_n", "iterations_k_over_n.csv"), ("m_over_n", "iterations_m_over_n.csv")):
        code |= cli.main(["sweep", "--study", "iterations", "--axis", axis,
                          "--preset", a.preset, "--seed", a.seed, "--points", a.points,
                          "--workers", a.workers, "--out", out])
    return code


if __name__ == "__main__":
    sys.exit(main())
