"""Exact vs greedy wall time over the n x m grid (timing table for the scaling figure)."""

import argparse

from _common import RESULTS, run

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="100,1000,5000", help="e.g. 100..10000 for the full 1-2-5 grid")
    ap.add_argument("--m", default="10,50")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--time-limit", type=float, default=600.0)
    a = ap.parse_args()
    run("bench", "scaling", "--n", a.n, "--m", a.m, "--seeds", a.seeds, "--time-limit", a.time_limit,
        "--out", RESULTS / "scaling.csv")
