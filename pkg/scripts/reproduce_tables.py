#!/usr/bin/env python3
"""Run every convergence study and write the CSV and plot files.

Level ranges follow the alignment between our refinement levels and the
published tables (see README).  Usage: reproduce_tables.py [output_dir]
"""
import sys
import time

from difem.experiments import run_convergence
from difem.problems import catalog

STUDIES = [
    # (example, beta_minus, first level, last level)
    *[(1, b, 3, 7) for b in (0.001, 0.1, 10.0, 1000.0)],
    (2, 1.0, 2, 6),
    *[(2, b, 1, 6) for b in (0.001, 0.1, 10.0, 1000.0)],
    (3, 1.0, 2, 6),
    (3, 100.0, 2, 6),
    (4, 1.0, 2, 6),
    (4, 10.0, 2, 6),
]


def main(out="results"):
    for example, beta, lo, hi in STUDIES:
        t0 = time.perf_counter()
        run = run_convergence(catalog(example, beta), range(lo, hi + 1), out)
        print(f"\nexample {example}, beta^-/beta^+ = {beta:g}  ({time.perf_counter() - t0:.1f} s)")
        print(run.table())
    print(f"\nfiles written to {out}/")


if __name__ == "__main__":
    main(*sys.argv[1:2])
