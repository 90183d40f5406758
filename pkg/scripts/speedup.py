"""Mean latency against cloud speedup at 1x and 10x request rates."""

import argparse

from _common import RESULTS, run

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--edge-service-time", type=float, default=50.0, help="ms; 4 ms leaves no crossover")
    ap.add_argument("--duration", type=float, default=10.0)
    a = ap.parse_args()
    run("bench", "speedup", "--edge-service-time", a.edge_service_time, "--duration", a.duration,
        "--out", RESULTS / "speedup.csv")
