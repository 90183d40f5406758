"""Regenerate the bundled synthetic sensor coordinate file."""

import argparse
from pathlib import Path

from hflop.scenarios import SYNTHETIC_SENSORS, synthetic_sensor_points

DEFAULT = Path(__file__).resolve().parents[1] / "src" / "hflop" / "data" / SYNTHETIC_SENSORS

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=207)
    ap.add_argument("--seed", type=int, default=2012)
    ap.add_argument("--out", type=Path, default=DEFAULT)
    args = ap.parse_args()
    pts = synthetic_sensor_points(args.n, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("id,lat,lon\n")
        for k, (lat, lon) in enumerate(pts):
            fh.write(f"{700000 + k},{lat:.6f},{lon:.6f}\n")
    print(f"wrote {len(pts)} sensors to {args.out}")
