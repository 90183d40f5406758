"""Response times of flat FL, location clustering and HFLOP on the clustered sensor scenario."""

import argparse

from _common import RESULTS, run

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario-seed", type=int, default=0)
    ap.add_argument("--seeds", type=int, default=5, help="simulation seeds, one CSV each")
    ap.add_argument("--duration", type=float, default=30.0)
    a = ap.parse_args()
    for seed in range(a.seeds):
        run("bench", "latency", "--scenario-seed", a.scenario_seed, "--seed", seed, "--duration", a.duration,
            "--out", RESULTS / f"latency_seed{seed}.csv")
