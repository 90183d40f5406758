"""Geographic k-means clustering and per-cluster participant sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

MAX_ITER = 100
TOL = 1e-9


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia_history: List[float]  # within-cluster SSE after every assignment step
    n_iter: int

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = [points[rng.integers(n)]]
    d2 = _sq_dists(points, np.array(centers))[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a center
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers.append(points[idx])
        d2 = np.minimum(d2, _sq_dists(points, points[idx : idx + 1])[:, 0])
    return np.array(centers, dtype=float)


def _assign(points: np.ndarray, centroids: np.ndarray):
    d = _sq_dists(points, centroids)
    labels = np.argmin(d, axis=1)  # argmin picks the lowest cluster id on ties
    return labels, d[np.arange(len(points)), labels]


def kmeans(points: Sequence, k: int, seed: int) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding on planar Euclidean distance.

    An emptied cluster is re-seeded at the point farthest from its centroid,
    which keeps the SSE non-increasing.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("need a non-empty list of 2-D points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    if k < 1 or k > len(pts):
        raise ValueError(f"k must be in [1, {len(pts)}], got {k}")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(pts, k, rng)
    history: List[float] = []
    n_iter = 0
    for n_iter in range(1, MAX_ITER + 1):
        labels, d2 = _assign(pts, centroids)
        counts = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # farthest point whose cluster keeps a member after the move
            movable = counts[labels] > 1
            far = int(np.argmax(np.where(movable, d2, -1.0)))
            labels[far] = c
            d2[far] = 0.0
            counts = np.bincount(labels, minlength=k)
        history.append(float(d2.sum()))
        new = np.array([pts[labels == c].mean(axis=0) for c in range(k)])
        shift = float(np.max(np.abs(new - centroids)))
        centroids = new
        if shift <= TOL:
            break
    final, d2 = _assign(pts, centroids)
    if np.all(np.bincount(final, minlength=k) > 0):
        labels = final
        history.append(float(d2.sum()))
    return KMeansResult(labels, centroids, history, n_iter)


def cluster_geographic(points: Sequence, k: int, seed: int) -> np.ndarray:
    """Cluster id per point (index-aligned with ``points``)."""
    return kmeans(points, k, seed).labels


def select_participants(clusters: Sequence[int], per_cluster: int, seed: int) -> List[int]:
    """Sample ``per_cluster`` distinct point indices from every cluster.

    Returns a sorted list of indices into ``clusters``.
    """
    labels = np.asarray(clusters)
    if per_cluster < 0:
        raise ValueError("per_cluster must be >= 0")
    rng = np.random.default_rng(seed)
    chosen: List[int] = []
    for c in sorted(set(labels.tolist())):
        members = np.flatnonzero(labels == c)
        if len(members) < per_cluster:
            raise ValueError(f"cluster {c} has {len(members)} members, fewer than {per_cluster}")
        chosen.extend(int(x) for x in rng.choice(members, size=per_cluster, replace=False))
    return sorted(chosen)
