"""Weighted vehicle-type catalog and per-type emission factors.

The registry joins a fleet composition table (make/model/year with count
weights) against per-type CO2 rates in g/mile.  From it come the
fleet-weighted statistics, the calibration baseline rate E_b, the per-type
factors mu_t = rate_t / E_b, and the reproducible random assignment of a
type to each trip.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .seeding import stable_seed
from .store import TrajectoryStore


class FleetError(Exception):
    pass


@dataclass(frozen=True)
class VehicleType:
    make: str
    model: str
    model_year: int
    weight: float      # fleet count / expansion weight
    epa_rate: float    # CO2 g/mile

    def __post_init__(self):
        if self.weight <= 0 or self.epa_rate <= 0:
            raise FleetError(f"{self.make} {self.model} {self.model_year}: "
                             "weight and epa_rate must be positive")


@dataclass(frozen=True)
class FleetStats:
    mean_rate: float
    std_rate: float
    mean_age: float
    std_age: float


class FleetRegistry:
    def __init__(self, types: list[VehicleType], analysis_year: int = 2020):
        if not types:
            raise FleetError("empty registry")
        self.types = list(types)
        self.analysis_year = analysis_year
        self.weights = np.array([t.weight for t in self.types])
        self.rates = np.array([t.epa_rate for t in self.types])
        self.ages = np.array([analysis_year - t.model_year for t in self.types],
                             dtype=float)
        self._cum_weights = np.cumsum(self.weights)

    def __len__(self) -> int:
        return len(self.types)

    def weighted_stats(self) -> FleetStats:
        """Weight-weighted means and population standard deviations."""
        w = self.weights / self.weights.sum()

        def moments(x):
            m = float(np.dot(w, x))
            return m, float(np.sqrt(np.dot(w, (x - m) ** 2)))

        mr, sr = moments(self.rates)
        ma, sa = moments(self.ages)
        return FleetStats(mr, sr, ma, sa)

    def sample_type_index(self, u: float) -> int:
        """Index of the type whose weight interval contains u*total."""
        return int(np.searchsorted(self._cum_weights, u * self._cum_weights[-1],
                                   side="right"))


def fleet_weighted_stats(registry: FleetRegistry) -> FleetStats:
    return registry.weighted_stats()


def aggregate_epa_rates(rows) -> dict[tuple[str, str, int], float]:
    """Unweighted mean rate over engine/test variants per (make, model, year).

    Rows are (make, model, model_year, variant, rate) tuples or dicts with
    those keys.
    """
    acc: dict[tuple[str, str, int], list[float]] = {}
    for row in rows:
        if isinstance(row, dict):
            key = (row["make"].strip(), row["model"].strip(),
                   int(row["model_year"]))
            rate = float(row["co2_g_per_mile"])
        else:
            make, model, year, _variant, rate = row
            key = (make, model, int(year))
            rate = float(rate)
        acc.setdefault(key, []).append(rate)
    return {k: sum(v) / len(v) for k, v in acc.items()}


def load_epa_rates(path) -> dict[tuple[str, str, int], float]:
    """EPA CSV: ``make,model,model_year,variant,co2_g_per_mile``."""
    with open(path, newline="", encoding="utf-8") as f:
        return aggregate_epa_rates(csv.DictReader(f))


@dataclass
class FleetLoadReport:
    n_fleet_rows: int = 0
    n_unmatched_dropped: int = 0
    n_out_of_range: int = 0


def load_fleet(fleet_source, epa_rates: dict[tuple[str, str, int], float],
               analysis_year: int = 2020,
               year_range: tuple[int, int] = (2000, 2017)
               ) -> tuple[FleetRegistry, FleetLoadReport]:
    """Inner-join fleet rows with EPA rates.

    Fleet source is a CSV path (``make,model,model_year,weight``) or an
    iterable of row dicts.  Unmatched and out-of-range rows are dropped
    with counts; duplicate keys merge by summing weights.
    """
    if isinstance(fleet_source, (str, bytes)) or hasattr(fleet_source, "__fspath__"):
        with open(fleet_source, newline="", encoding="utf-8") as f:
            return load_fleet(list(csv.DictReader(f)), epa_rates,
                              analysis_year, year_range)
    report = FleetLoadReport()
    merged: dict[tuple[str, str, int], float] = {}
    for row in fleet_source:
        report.n_fleet_rows += 1
        key = (row["make"].strip(), row["model"].strip(), int(row["model_year"]))
        if not (year_range[0] <= key[2] <= year_range[1]):
            report.n_out_of_range += 1
            continue
        if key not in epa_rates:
            report.n_unmatched_dropped += 1
            continue
        merged[key] = merged.get(key, 0.0) + float(row["weight"])
    if not merged:
        raise FleetError("fleet/EPA join produced no vehicles")
    types = [VehicleType(make, model, year, weight, epa_rates[(make, model, year)])
             for (make, model, year), weight in sorted(merged.items())]
    return FleetRegistry(types, analysis_year), report


def baseline_rate(epa_rates: dict[tuple[str, str, int], float],
                  calibration_keys) -> float:
    """Baseline g/mile rate E_b: unweighted mean over calibration vehicles.

    Keys may be (make, model) pairs (all matching years are averaged first)
    or full (make, model, year) triples.
    """
    per_vehicle = []
    for key in calibration_keys:
        key = tuple(key)
        if len(key) == 3:
            make, model, year = key[0], key[1], int(key[2])
            if (make, model, year) not in epa_rates:
                raise FleetError(f"calibration vehicle {key} not in EPA table")
            per_vehicle.append(epa_rates[(make, model, year)])
        else:
            make, model = key
            rates = [r for (mk, md, _y), r in epa_rates.items()
                     if mk == make and md == model]
            if not rates:
                raise FleetError(f"calibration vehicle {key} not in EPA table")
            per_vehicle.append(sum(rates) / len(rates))
    return sum(per_vehicle) / len(per_vehicle)


def vehicle_type_factor(vt: VehicleType, e_b: float) -> float:
    """mu_t: the type's g/mile rate relative to the calibration baseline."""
    if e_b <= 0:
        raise FleetError("baseline rate must be positive")
    return vt.epa_rate / e_b


@dataclass
class TypeAssignment:
    """Per-trip vehicle type indices, keyed deterministically by trip id."""

    indices: dict[str, int]
    seed: int

    def __getitem__(self, trip_id: str) -> int:
        return self.indices[trip_id]

    def index_array(self, trip_ids: list[str]) -> np.ndarray:
        return np.array([self.indices[tid] for tid in trip_ids], dtype=np.int64)


def assign_vehicle_types(store: TrajectoryStore, registry: FleetRegistry,
                         seed: int) -> TypeAssignment:
    """Sample one type per trip proportional to registry weights.

    Each trip uses its own stream keyed by hash(seed, trip_id), so the
    assignment does not depend on iteration order.
    """
    indices = {}
    for tid in store.trip_ids:
        u = np.random.default_rng(stable_seed(seed, tid, "vtype")).random()
        indices[tid] = registry.sample_type_index(u)
    return TypeAssignment(indices, seed)
