"""Trajectory ingestion, validation, and indexing.

A trajectory is the per-second kinematic record of one trip (speed in m/s,
acceleration in m/s^2).  The store keeps only intercity trips: both trip
ends must map, through the zone clustering, to distinct intercity nodes.
Trips touching urban or unmapped zones are counted and dropped; trips that
violate kinematic bounds are rejected and recorded in the ingest report.

Unit regime: speeds in m/s and accelerations in m/s^2 inside all kernels;
distances are reported in miles (one conversion constant below).  Distance
uses the rectangle rule over the speed samples so that distance, emission,
and energy all integrate the same sample set.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

METERS_PER_MILE = 1609.344

#: Sentinel node id marking a zone as urban / excluded from the intercity net.
URBAN = "URBAN"


class IngestError(Exception):
    """Malformed input that prevents building a store at all."""


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    v: float  # m/s
    a: float  # m/s^2
    link_id: str | None = None


@dataclass
class Trajectory:
    """Ordered per-second samples of one trip between two intercity nodes."""

    trip_id: str
    origin: str
    destination: str
    v: np.ndarray
    a: np.ndarray | None = None
    step: float = 1.0
    t0: float = 0.0
    link_ids: list[str] | None = None

    def __len__(self) -> int:
        return len(self.v)

    @property
    def od(self) -> tuple[str, str]:
        return (self.origin, self.destination)

    @property
    def points(self) -> Iterator[TrajectoryPoint]:
        a = self.a if self.a is not None else np.zeros_like(self.v)
        for k in range(len(self.v)):
            link = self.link_ids[k] if self.link_ids else None
            yield TrajectoryPoint(self.t0 + k * self.step, float(self.v[k]),
                                  float(a[k]), link)


def derive_acceleration(traj: Trajectory) -> Trajectory:
    """Fill missing accelerations by forward difference of the speeds.

    a_k = (v_{k+1} - v_k) / step for all but the last sample; the last
    sample gets 0.  Samples that already carry an acceleration are left
    untouched (missing values are NaN).
    """
    v = np.asarray(traj.v, dtype=float)
    derived = np.zeros_like(v)
    if len(v) > 1:
        derived[:-1] = np.diff(v) / traj.step
    else:
        warnings.warn(f"trip {traj.trip_id}: single-point trajectory, "
                      "acceleration set to 0")
    if traj.a is None:
        a = derived
    else:
        a = np.where(np.isnan(traj.a), derived, traj.a)
    return Trajectory(traj.trip_id, traj.origin, traj.destination, v, a,
                      step=traj.step, t0=traj.t0, link_ids=traj.link_ids)


def trip_distance(traj: Trajectory) -> float:
    """Trip distance in miles: rectangle rule over the speed samples."""
    return float(np.sum(traj.v) * traj.step / METERS_PER_MILE)


@dataclass(frozen=True)
class ZoneClustering:
    """Mapping from traffic-analysis-zone id to intercity node id.

    Zones mapped to the ``URBAN`` sentinel (or absent entirely) are treated
    as urban and excluded from the intercity network.
    """

    zone_to_node: dict[str, str]

    @classmethod
    def from_csv(cls, path) -> "ZoneClustering":
        mapping: dict[str, str] = {}
        with open(path, newline="", encoding="utf-8") as f:
            for i, row in enumerate(csv.DictReader(f)):
                zone = row["zone_id"].strip()
                if zone in mapping:
                    raise IngestError(f"duplicate zone id {zone!r} in {path}")
                mapping[zone] = row["node_id"].strip()
        return cls(mapping)

    @classmethod
    def identity(cls, nodes: Iterable[str]) -> "ZoneClustering":
        return cls({n: n for n in nodes})

    def node(self, zone: str) -> str | None:
        """Intercity node for a zone, or None for urban/unmapped zones."""
        node = self.zone_to_node.get(zone)
        if node is None or node == URBAN:
            return None
        return node

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["zone_id", "node_id"])
            for zone in sorted(self.zone_to_node):
                w.writerow([zone, self.zone_to_node[zone]])


@dataclass(frozen=True)
class ValidationConfig:
    a_max: float = 10.0        # |a| sanity bound, m/s^2
    step: float | None = None  # None: infer from the first trip row pair
    step_tol: float = 1e-6


@dataclass
class IngestReport:
    n_input: int = 0
    n_accepted: int = 0
    n_urban_dropped: int = 0
    rejections: list[tuple[str, str]] = field(default_factory=list)

    @property
    def n_rejected(self) -> int:
        return len(self.rejections)


class TrajectoryStore:
    """Immutable-after-construction index of intercity trajectories.

    Trajectories are indexed by trip_id and grouped by OD pair; the OD
    groups form a partition of the accepted trips.
    """

    def __init__(self, trajectories: dict[str, Trajectory],
                 report: IngestReport | None = None):
        self._trajectories = dict(trajectories)
        self.report = report
        self._groups: dict[tuple[str, str], list[str]] = {}
        for tid in sorted(self._trajectories):
            self._groups.setdefault(self._trajectories[tid].od, []).append(tid)
        self._distances = {tid: trip_distance(t)
                           for tid, t in self._trajectories.items()}

    def __len__(self) -> int:
        return len(self._trajectories)

    def __contains__(self, trip_id: str) -> bool:
        return trip_id in self._trajectories

    def __getitem__(self, trip_id: str) -> Trajectory:
        return self._trajectories[trip_id]

    @property
    def trip_ids(self) -> list[str]:
        return sorted(self._trajectories)

    @property
    def groups(self) -> dict[tuple[str, str], list[str]]:
        return self._groups

    def distance(self, trip_id: str) -> float:
        return self._distances[trip_id]

    def vmt(self) -> tuple[float, dict[tuple[str, str], float]]:
        """Total and per-OD vehicle miles traveled (deterministic order)."""
        per_od = {od: sum(self._distances[tid] for tid in tids)
                  for od, tids in sorted(self._groups.items())}
        return sum(per_od.values()), per_od


def store_vmt(store: TrajectoryStore) -> tuple[float, dict[tuple[str, str], float]]:
    return store.vmt()


def _finalize_trip(trip_id, origin_zone, dest_zone, ts, vs, accs, links,
                   clustering: ZoneClustering, config: ValidationConfig):
    """Validate one accumulated trip.  Returns ('ok', Trajectory),
    ('urban', None), or ('reject', reason)."""
    ts = np.asarray(ts, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if np.any(vs < 0):
        return "reject", f"negative speed at t={ts[np.argmax(vs < 0)]:g}"
    step = config.step
    if len(ts) > 1:
        diffs = np.diff(ts)
        if step is None:
            step = float(diffs[0])
        if step <= 0 or np.any(np.abs(diffs - step) > config.step_tol):
            return "reject", "non-uniform time step"
    elif step is None:
        step = 1.0
    a = np.asarray(accs, dtype=float) if any(x is not None and not np.isnan(x)
                                             for x in accs) else None
    traj = Trajectory(trip_id, "", "", vs, a, step=step, t0=float(ts[0]),
                      link_ids=links if any(links) else None)
    traj = derive_acceleration(traj)
    if np.any(np.abs(traj.a) > config.a_max):
        return "reject", f"acceleration bound exceeded (|a| > {config.a_max:g})"
    o_node = clustering.node(origin_zone)
    d_node = clustering.node(dest_zone)
    if o_node is None or d_node is None or o_node == d_node:
        return "urban", None
    traj.origin, traj.destination = o_node, d_node
    return "ok", traj


def ingest_trajectories(source, clustering: ZoneClustering,
                        config: ValidationConfig | None = None) -> TrajectoryStore:
    """Build a TrajectoryStore from a CSV path or an iterable of row dicts.

    Expected columns: ``trip_id,origin_zone,dest_zone,t,v[,a][,link_id]``.
    Intra-node and unmapped-zone trips are dropped as urban; invalid trips
    are rejected and listed in the ingest report.
    """
    config = config or ValidationConfig()
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as f:
            return ingest_trajectories(csv.DictReader(f), clustering, config)

    trips: dict[str, dict] = {}
    bad: dict[str, str] = {}
    for rownum, row in enumerate(source, start=2):  # row 1 is the header
        tid = (row.get("trip_id") or "").strip()
        if not tid:
            raise IngestError(f"row {rownum}: missing trip_id")
        if tid in bad:
            continue
        try:
            t = float(row["t"])
            v = float(row["v"])
            a = float(row["a"]) if row.get("a") not in (None, "") else float("nan")
        except (KeyError, TypeError, ValueError):
            bad[tid] = f"malformed row {rownum}"
            trips.pop(tid, None)
            continue
        rec = trips.setdefault(tid, {
            "origin": (row.get("origin_zone") or "").strip(),
            "dest": (row.get("dest_zone") or "").strip(),
            "t": [], "v": [], "a": [], "link": []})
        rec["t"].append(t)
        rec["v"].append(v)
        rec["a"].append(a)
        rec["link"].append((row.get("link_id") or "").strip() or None)

    report = IngestReport(n_input=len(trips) + len(bad))
    accepted: dict[str, Trajectory] = {}
    for tid, reason in sorted(bad.items()):
        report.rejections.append((tid, reason))
    for tid in sorted(trips):
        rec = trips[tid]
        status, result = _finalize_trip(tid, rec["origin"], rec["dest"],
                                        rec["t"], rec["v"], rec["a"],
                                        rec["link"], clustering, config)
        if status == "ok":
            accepted[tid] = result
            report.n_accepted += 1
        elif status == "urban":
            report.n_urban_dropped += 1
        else:
            report.rejections.append((tid, result))
    return TrajectoryStore(accepted, report)


def write_trajectories_csv(store_or_trips, path) -> None:
    """Write trajectories in the ingest CSV schema."""
    if isinstance(store_or_trips, TrajectoryStore):
        trips = [store_or_trips[tid] for tid in store_or_trips.trip_ids]
    else:
        trips = list(store_or_trips)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["trip_id", "origin_zone", "dest_zone", "t", "v", "a"])
        for traj in trips:
            a = traj.a if traj.a is not None else np.zeros_like(traj.v)
            for k in range(len(traj)):
                w.writerow([traj.trip_id, traj.origin, traj.destination,
                            f"{traj.t0 + k * traj.step:g}",
                            f"{traj.v[k]:.6f}", f"{a[k]:.6f}"])
