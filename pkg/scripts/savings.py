"""Savings against flat FL for growing edge density, mean and CI95 over seeds."""

import argparse

from _common import RESULTS, run

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200, help="200 or 500; both appear in the source text")
    ap.add_argument("--m", default="5..50")
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--rounds", type=int, default=100, help="presets: 20 or 100")
    a = ap.parse_args()
    run("bench", "savings", "--n", a.n, "--m", a.m, "--seeds", a.seeds, "--rounds", a.rounds,
        "--rows", RESULTS / f"savings_n{a.n}_rows.csv", "--out", RESULTS / f"savings_n{a.n}.csv")
