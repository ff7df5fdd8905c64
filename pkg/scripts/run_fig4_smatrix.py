#!/usr/bin/env python3
"""Full two-port S-matrix maps around the in-gap anti-crossing."""

import argparse

from ricemele.cli import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/fig4")
    args = parser.parse_args()
    raise SystemExit(main(["scatter", "--preset", "fig4", "--out", args.out]))
