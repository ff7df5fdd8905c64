#!/usr/bin/env python3
"""Fitted-device transmission map and the 19-peak far-detuned slice."""

import argparse

from ricemele.cli import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/fig3")
    args = parser.parse_args()
    raise SystemExit(main(["scatter", "--preset", "fig3", "--out", args.out]))
