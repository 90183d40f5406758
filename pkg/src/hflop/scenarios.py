"""Clustered sensor scenario: geographic clusters host one edge node each."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import List, Sequence, Tuple

import numpy as np

from .clustering import kmeans, select_participants
from .solver.model import FEASIBLE, Solution, objective
from .topology import RATE_DECIMALS, Device, EdgeNode, HflopInstance, Topology, read_sensor_file

SYNTHETIC_SENSORS = "sensors_synthetic.csv"


def bundled_sensor_points() -> Tuple[List[str], np.ndarray]:
    """207 synthetic sensor positions in the Los Angeles highway area (id,lat,lon)."""
    with resources.files("hflop.data").joinpath(SYNTHETIC_SENSORS).open("r", encoding="utf-8") as fh:
        return read_sensor_file(fh)


def synthetic_sensor_points(n: int = 207, seed: int = 0) -> np.ndarray:
    """Points scattered along a few straight corridors plus background noise."""
    rng = np.random.default_rng(seed)
    corridors = [
        ((34.02, -118.50), (34.16, -118.15)),
        ((33.93, -118.28), (34.22, -118.28)),
        ((34.05, -118.45), (34.05, -118.10)),
        ((34.15, -118.60), (34.28, -118.35)),
        ((33.95, -118.40), (34.10, -118.20)),
    ]
    pts = []
    for k in range(n):
        if k % 10 == 9:
            pts.append((rng.uniform(33.9, 34.3), rng.uniform(-118.6, -118.1)))
            continue
        (a_lat, a_lon), (b_lat, b_lon) = corridors[rng.integers(len(corridors))]
        u = rng.random()
        pts.append((a_lat + u * (b_lat - a_lat) + rng.normal(0, 0.004), a_lon + u * (b_lon - a_lon) + rng.normal(0, 0.004)))
    return np.round(np.array(pts), 6)


@dataclass(frozen=True)
class ClusteredScenario:
    instance: HflopInstance
    location: Solution  # every device on its own cluster's edge, capacity ignored
    sensor_index: Tuple[int, ...]  # chosen rows of the input point list
    cluster_of_device: Tuple[int, ...]


def clustered_scenario(
    points: Sequence,
    clusters: int = 4,
    per_cluster: int = 5,
    seed: int = 0,
    lambda_range: Tuple[float, float] = (20.0, 100.0),
    capacity_range: Tuple[float, float] = (150.0, 650.0),
    l: int = 2,
) -> ClusteredScenario:
    """Edge j sits at the centroid of cluster j; devices reach their own
    cluster's edge for free and any other at unit cost; cloud links cost 1.
    All selected devices must participate.
    """
    pts = np.asarray(points, dtype=float)
    km = kmeans(pts, clusters, seed)
    chosen = select_participants(km.labels, per_cluster, seed)
    rng = np.random.default_rng([seed, 1])
    lams = np.round(rng.uniform(*lambda_range, size=len(chosen)), RATE_DECIMALS)
    caps = np.round(rng.uniform(*capacity_range, size=clusters), RATE_DECIMALS)
    home = [int(km.labels[p]) for p in chosen]
    devices = tuple(Device(i, float(lams[i]), (float(pts[p, 0]), float(pts[p, 1]))) for i, p in enumerate(chosen))
    edges = tuple(
        EdgeNode(j, float(caps[j]), 1.0, (float(km.centroids[j, 0]), float(km.centroids[j, 1])))
        for j in range(clusters)
    )
    cost = [[0.0 if home[i] == j else 1.0 for j in range(clusters)] for i in range(len(chosen))]
    instance = HflopInstance(Topology(devices, edges, cost), l=l, T=len(chosen))
    loc = Solution(tuple(home), objective(instance, home), "location", FEASIBLE)
    return ClusteredScenario(instance, loc, tuple(chosen), tuple(home))
