"""System model types, the uniform instance generator and instance persistence."""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Optional, Sequence, Tuple, Union

import numpy as np

INF = math.inf
RATE_DECIMALS = 3

Coords = Optional[Tuple[float, float]]
PathOrStream = Union[str, os.PathLike, IO[str]]


class InstanceError(ValueError):
    """Raised for malformed instance documents or invalid model values.

    ``path`` names the offending field, e.g. ``device_edge_cost[2]``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _check_nonneg(value: float, path: str, allow_inf: bool = False) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceError(f"expected a number, got {value!r}", path)
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise InstanceError(f"must be finite, got {value!r}", path)
    if value < 0:
        raise InstanceError(f"must be >= 0, got {value!r}", path)


@dataclass(frozen=True)
class Device:
    id: int
    lam: float
    coords: Coords = None

    def __post_init__(self):
        _check_nonneg(self.lam, f"device {self.id}.lambda")


@dataclass(frozen=True)
class EdgeNode:
    id: int
    capacity: float
    cloud_cost: float
    coords: Coords = None

    def __post_init__(self):
        _check_nonneg(self.capacity, f"edge {self.id}.capacity", allow_inf=True)
        _check_nonneg(self.cloud_cost, f"edge {self.id}.cloud_cost")

    @property
    def uncapacitated(self) -> bool:
        return math.isinf(self.capacity)


@dataclass(frozen=True)
class Topology:
    devices: Tuple[Device, ...]
    edges: Tuple[EdgeNode, ...]
    device_edge_cost: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(
            self, "device_edge_cost", tuple(tuple(row) for row in self.device_edge_cost)
        )
        for kind, items in (("devices", self.devices), ("edges", self.edges)):
            ids = [x.id for x in items]
            if len(set(ids)) != len(ids):
                raise InstanceError("duplicate ids", kind)
        n, m = len(self.devices), len(self.edges)
        if len(self.device_edge_cost) != n:
            raise InstanceError(
                f"expected {n} rows, got {len(self.device_edge_cost)}", "device_edge_cost"
            )
        for i, row in enumerate(self.device_edge_cost):
            if len(row) != m:
                raise InstanceError(f"expected {m} columns, got {len(row)}", f"device_edge_cost[{i}]")
            for j, c in enumerate(row):
                _check_nonneg(c, f"device_edge_cost[{i}][{j}]")

    @property
    def n(self) -> int:
        return len(self.devices)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def cost_matrix(self) -> np.ndarray:
        a = np.array(self.device_edge_cost, dtype=float).reshape(self.n, self.m)
        a.setflags(write=False)
        return a

    @cached_property
    def lambdas(self) -> np.ndarray:
        a = np.array([d.lam for d in self.devices], dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def capacities(self) -> np.ndarray:
        a = np.array([e.capacity for e in self.edges], dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def cloud_costs(self) -> np.ndarray:
        a = np.array([e.cloud_cost for e in self.edges], dtype=float)
        a.setflags(write=False)
        return a


@dataclass(frozen=True)
class HflopInstance:
    topology: Topology
    l: int = 1
    T: int = 0

    def __post_init__(self):
        if isinstance(self.l, bool) or not isinstance(self.l, int) or self.l < 1:
            raise InstanceError(f"must be an integer >= 1, got {self.l!r}", "l")
        if isinstance(self.T, bool) or not isinstance(self.T, int) or not 0 <= self.T <= self.topology.n:
            raise InstanceError(f"must be an integer in [0, {self.topology.n}], got {self.T!r}", "T")

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def m(self) -> int:
        return self.topology.m

    def with_capacities(self, capacities: Sequence[float]) -> "HflopInstance":
        edges = tuple(
            EdgeNode(e.id, float(c), e.cloud_cost, e.coords)
            for e, c in zip(self.topology.edges, capacities)
        )
        topo = Topology(self.topology.devices, edges, self.topology.device_edge_cost)
        return HflopInstance(topo, self.l, self.T)

    def uncapacitated(self) -> "HflopInstance":
        return self.with_capacities([INF] * self.m)


def _check_range(rng: Tuple[float, float], name: str) -> Tuple[float, float]:
    lo, hi = rng
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0 or hi < 0 or lo > hi:
        raise ValueError(f"invalid {name} {rng!r}: need 0 <= min <= max")
    return float(lo), float(hi)


def generate_uniform(
    n: int,
    m: int,
    seed: int,
    lambda_range: Tuple[float, float] = (1.0, 10.0),
    capacity_range: Tuple[float, float] = (10.0, 100.0),
    l: int = 2,
    T: Optional[int] = None,
) -> HflopInstance:
    """Random instance of the {0,1}-cost benchmark family.

    Every device reaches exactly one edge (uniformly chosen) for free and all
    other edges at unit cost; every edge reaches the cloud at unit cost.
    ``T`` defaults to ``n`` (all devices participate).
    """
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    lam_lo, lam_hi = _check_range(lambda_range, "lambda_range")
    cap_lo, cap_hi = _check_range(capacity_range, "capacity_range")
    rng = np.random.default_rng(seed)
    home = rng.integers(0, m, size=n)
    # 1e-3 resolution keeps rates and capacities exact decimals
    lams = np.round(rng.uniform(lam_lo, lam_hi, size=n), RATE_DECIMALS)
    caps = np.round(rng.uniform(cap_lo, cap_hi, size=m), RATE_DECIMALS)
    cost = np.ones((n, m))
    cost[np.arange(n), home] = 0.0
    devices = tuple(Device(i, float(lams[i])) for i in range(n))
    edges = tuple(EdgeNode(j, float(caps[j]), 1.0) for j in range(m))
    topo = Topology(devices, edges, cost.tolist())
    return HflopInstance(topo, l=l, T=n if T is None else T)


# -- persistence -------------------------------------------------------------


def _num(value, path: str, allow_inf: bool = False) -> float:
    if isinstance(value, str):
        if allow_inf and value.strip().lower() == "inf":
            return INF
        try:
            value = float(value)
        except ValueError:
            raise InstanceError(f"not a number: {value!r}", path) from None
        if math.isinf(value) and allow_inf:
            return value
    _check_nonneg(value, path, allow_inf=allow_inf)
    return float(value)


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceError(f"expected an integer, got {value!r}", path)
    return value


def _coords(value, path: str) -> Coords:
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise InstanceError("expected [x, y]", path)
    out = []
    for k, v in enumerate(value):
        v = float(v) if isinstance(v, str) else v
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise InstanceError(f"expected a finite number, got {v!r}", f"{path}[{k}]")
        out.append(float(v))
    return (out[0], out[1])


def instance_from_dict(doc: dict) -> HflopInstance:
    if not isinstance(doc, dict):
        raise InstanceError("document must be an object")
    for key in ("devices", "edges", "device_edge_cost", "l", "T"):
        if key not in doc:
            raise InstanceError("missing field", key)
    if not isinstance(doc["devices"], list):
        raise InstanceError("expected a list", "devices")
    if not isinstance(doc["edges"], list):
        raise InstanceError("expected a list", "edges")
    devices = []
    for i, d in enumerate(doc["devices"]):
        p = f"devices[{i}]"
        if not isinstance(d, dict):
            raise InstanceError("expected an object", p)
        if "id" not in d or "lambda" not in d:
            raise InstanceError("needs 'id' and 'lambda'", p)
        devices.append(
            Device(_int(d["id"], p + ".id"), _num(d["lambda"], p + ".lambda"), _coords(d.get("coords"), p + ".coords"))
        )
    edges = []
    for j, e in enumerate(doc["edges"]):
        p = f"edges[{j}]"
        if not isinstance(e, dict):
            raise InstanceError("expected an object", p)
        for key in ("id", "capacity", "cloud_cost"):
            if key not in e:
                raise InstanceError(f"missing '{key}'", p)
        edges.append(
            EdgeNode(
                _int(e["id"], p + ".id"),
                _num(e["capacity"], p + ".capacity", allow_inf=True),
                _num(e["cloud_cost"], p + ".cloud_cost"),
                _coords(e.get("coords"), p + ".coords"),
            )
        )
    rows = doc["device_edge_cost"]
    if not isinstance(rows, list):
        raise InstanceError("expected a list of rows", "device_edge_cost")
    if len(rows) != len(devices):
        raise InstanceError(f"expected {len(devices)} rows, got {len(rows)}", "device_edge_cost")
    matrix = []
    for i, row in enumerate(rows):
        p = f"device_edge_cost[{i}]"
        if not isinstance(row, list):
            raise InstanceError("expected a list", p)
        if len(row) != len(edges):
            raise InstanceError(f"expected {len(edges)} columns, got {len(row)}", p)
        matrix.append(tuple(_num(c, f"{p}[{j}]") for j, c in enumerate(row)))
    topo = Topology(tuple(devices), tuple(edges), tuple(matrix))
    return HflopInstance(topo, l=_int(doc["l"], "l"), T=_int(doc["T"], "T"))


def instance_to_dict(instance: HflopInstance) -> dict:
    topo = instance.topology

    def dev(d: Device) -> dict:
        out = {"id": d.id, "lambda": d.lam}
        if d.coords is not None:
            out["coords"] = list(d.coords)
        return out

    def edge(e: EdgeNode) -> dict:
        out = {"id": e.id, "capacity": "inf" if e.uncapacitated else e.capacity, "cloud_cost": e.cloud_cost}
        if e.coords is not None:
            out["coords"] = list(e.coords)
        return out

    return {
        "devices": [dev(d) for d in topo.devices],
        "edges": [edge(e) for e in topo.edges],
        "device_edge_cost": [list(r) for r in topo.device_edge_cost],
        "l": instance.l,
        "T": instance.T,
    }


def load_instance(source: PathOrStream) -> HflopInstance:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from None
    return instance_from_dict(doc)


def save_instance(instance: HflopInstance, target: PathOrStream) -> None:
    # json emits repr() of floats, which round-trips bit-exactly
    text = json.dumps(instance_to_dict(instance), indent=1)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        target.write(text + "\n")


def dumps_instance(instance: HflopInstance) -> str:
    buf = io.StringIO()
    save_instance(instance, buf)
    return buf.getvalue()


# -- sensor coordinates --------------------------------------------------------


def read_sensor_file(source: PathOrStream) -> Tuple[list, np.ndarray]:
    """Read ``id,lat,lon`` lines. A non-numeric first line is treated as a header."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = source.read().splitlines()
    ids, pts = [], []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise InstanceError(f"expected 3 fields 'id,lat,lon', got {len(parts)}", f"line {lineno}")
        try:
            lat, lon = float(parts[1]), float(parts[2])
        except ValueError:
            if lineno == 1 and not ids:
                continue
            raise InstanceError(f"bad coordinates {parts[1:]!r}", f"line {lineno}") from None
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise InstanceError("coordinates must be finite", f"line {lineno}")
        ids.append(parts[0])
        pts.append((lat, lon))
    return ids, np.array(pts, dtype=float).reshape(-1, 2)
