#!/usr/bin/env python3
"""Quadrature, commuting, patch and inf-sup checks with their reports.

Usage: structural_checks.py [output_dir]
"""
import sys
from pathlib import Path

from difem.experiments import SUITES


def main(out="results"):
    Path(out).mkdir(parents=True, exist_ok=True)
    failed = []
    for name, suite in SUITES.items():
        ok, text = suite()
        (Path(out) / f"verify_{name}.txt").write_text(text + "\n")
        print(f"== {name}: {'PASS' if ok else 'FAIL'}\n{text}\n")
        if not ok:
            failed.append(name)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:2]))
