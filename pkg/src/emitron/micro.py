"""Instantaneous (per-second) emission kernel.

Emission rate is a clamped second-order polynomial in instantaneous speed
and acceleration:

    rate = max(0, c1 + c2*v + c3*v^2 + c4*a + c5*a^2 + c6*v*a)   [g/s]

Coefficients live in an external CSV, keyed by vehicle category, pollutant
and acceleration regime.  A pollutant either has a single ``all`` regime or
an exhaustive ``accel``/``decel`` split at a threshold stored in the table
itself.  Trip totals integrate the rate with the same rectangle rule (and
the same step) as trip distance.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .store import Trajectory, TrajectoryPoint, derive_acceleration

REGIMES = ("all", "accel", "decel")


class CoefficientError(Exception):
    """Missing or inconsistent coefficient configuration."""


@dataclass(frozen=True)
class CoefficientSet:
    category: str
    pollutant: str
    regime: str                 # 'all' | 'accel' | 'decel'
    threshold: float            # m/s^2 regime boundary; NaN for 'all'
    c: tuple[float, float, float, float, float, float]

    def rate(self, v: float, a: float) -> float:
        c1, c2, c3, c4, c5, c6 = self.c
        return max(0.0, c1 + c2 * v + c3 * v * v + c4 * a + c5 * a * a + c6 * v * a)

    def rate_array(self, v: np.ndarray, a: np.ndarray) -> np.ndarray:
        c1, c2, c3, c4, c5, c6 = self.c
        return np.maximum(0.0, c1 + c2 * v + c3 * v * v + c4 * a + c5 * a * a
                          + c6 * v * a)


class CoefficientTable:
    """Collection of CoefficientSet records with exhaustive regime coverage."""

    def __init__(self, sets: list[CoefficientSet]):
        self._by_key: dict[tuple[str, str], list[CoefficientSet]] = {}
        for cs in sets:
            self._by_key.setdefault((cs.category, cs.pollutant), []).append(cs)
        for key, entries in self._by_key.items():
            regimes = sorted(cs.regime for cs in entries)
            if regimes == ["all"]:
                continue
            if regimes == ["accel", "decel"]:
                thresholds = {cs.threshold for cs in entries}
                if len(thresholds) != 1:
                    raise CoefficientError(
                        f"{key}: accel/decel regimes disagree on threshold")
                continue
            raise CoefficientError(
                f"{key}: regimes {regimes} are not a partition "
                "(need ['all'] or ['accel', 'decel'])")

    @classmethod
    def from_csv(cls, path) -> "CoefficientTable":
        sets = []
        with open(path, newline="", encoding="utf-8") as f:
            for row in csv.DictReader(f):
                regime = row["regime"].strip().lower()
                if regime not in REGIMES:
                    raise CoefficientError(f"unknown regime {regime!r}")
                thr = float(row["threshold"]) if row.get("threshold") else float("nan")
                c = tuple(float(row[f"c{i}"]) for i in range(1, 7))
                sets.append(CoefficientSet(row["category"].strip(),
                                           row["pollutant"].strip(), regime,
                                           thr, c))
        return cls(sets)

    def entries(self, category: str, pollutant: str) -> list[CoefficientSet]:
        try:
            return self._by_key[(category, pollutant)]
        except KeyError:
            raise CoefficientError(
                f"no coefficients for ({category!r}, {pollutant!r})") from None

    @property
    def keys(self) -> list[tuple[str, str]]:
        return sorted(self._by_key)


def default_table() -> CoefficientTable:
    """Coefficient table shipped with the package."""
    path = resources.files("emitron.data") / "emission_coefficients.csv"
    with resources.as_file(path) as p:
        return CoefficientTable.from_csv(p)


def select_coefficients(table: CoefficientTable, category: str,
                        pollutant: str, a: float) -> CoefficientSet:
    """The unique coefficient set matching (category, pollutant, a)."""
    entries = table.entries(category, pollutant)
    if len(entries) == 1:
        return entries[0]
    accel = next(cs for cs in entries if cs.regime == "accel")
    decel = next(cs for cs in entries if cs.regime == "decel")
    return accel if a >= accel.threshold else decel


def instantaneous_emission(point: TrajectoryPoint, cs: CoefficientSet) -> float:
    """Clamped polynomial emission rate in g/s at one sample."""
    return cs.rate(point.v, point.a)


def trajectory_emission(traj: Trajectory, table: CoefficientTable,
                        category: str, pollutant: str) -> float:
    """Total grams for one trip: rectangle rule over per-sample rates."""
    if traj.a is None:
        traj = derive_acceleration(traj)
    v = np.asarray(traj.v, dtype=float)
    a = np.asarray(traj.a, dtype=float)
    entries = table.entries(category, pollutant)
    if len(entries) == 1:
        rates = entries[0].rate_array(v, a)
    else:
        accel = next(cs for cs in entries if cs.regime == "accel")
        decel = next(cs for cs in entries if cs.regime == "decel")
        rates = np.where(a >= accel.threshold,
                         accel.rate_array(v, a), decel.rate_array(v, a))
    return float(rates.sum() * traj.step)
