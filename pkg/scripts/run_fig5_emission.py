#!/usr/bin/env python3
"""Qubit emission at the leftward working point: lattice and Bloch traces."""

import argparse

from ricemele.cli import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/fig5")
    args = parser.parse_args()
    raise SystemExit(main(["emit", "--preset", "fig5", "--out", args.out]))
