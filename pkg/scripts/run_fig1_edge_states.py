#!/usr/bin/env python3
"""Ideal-chain edge states: eigenvalue sweep, populations, working points."""

import argparse

from ricemele.cli import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/fig1")
    args = parser.parse_args()
    raise SystemExit(main(["spectrum", "--preset", "fig1", "--out", args.out]))
