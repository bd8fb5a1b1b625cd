"""Monthly/annual CO2 estimator matrix (macro and micro bases).

Two bases times two adjustment flags give eight estimator variants:

* macro:  distance times an average g/mile rate (the published network
  average, or the fleet-weighted mean when type-adjusted);
* micro:  the per-second kernel integrated over each trajectory, scaled by
  the per-trip type factor mu when type-adjusted.

Daily OD totals are lifted to months multiplicatively: days-in-month times
the cold-weather factor (when temp-adjusted) times the monthly demand
factor phi.  The matrix can also be evaluated directly from a monthly VMT
table plus calibrated rates, which is how published state-scale totals are
reproduced without the original trajectory set.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fleet import FleetRegistry, TypeAssignment
from .micro import CoefficientTable, trajectory_emission
from .seasonal import MonthProfile
from .store import TrajectoryStore

GRAMS_PER_MILLION_TON = 1e12

MACRO, MICRO = "macro", "micro"


@dataclass(frozen=True)
class EstimatorVariant:
    basis: str            # 'macro' | 'micro'
    temp_adjusted: bool = False
    type_adjusted: bool = False

    @property
    def key(self) -> str:
        parts = [self.basis]
        if self.type_adjusted:
            parts.append("type")
        if self.temp_adjusted:
            parts.append("temp")
        return "_".join(parts)

    @classmethod
    def from_key(cls, key: str) -> "EstimatorVariant":
        parts = key.split("_")
        if parts[0] not in (MACRO, MICRO):
            raise ValueError(f"unknown variant key {key!r}")
        return cls(parts[0], temp_adjusted="temp" in parts[1:],
                   type_adjusted="type" in parts[1:])


ALL_VARIANTS = tuple(EstimatorVariant(basis, temp, typ)
                     for basis in (MACRO, MICRO)
                     for typ in (False, True)
                     for temp in (False, True))


@dataclass(frozen=True)
class RateSet:
    """Network-level g/mile rates used by the VMT-table evaluation path."""

    gamma: float        # published average rate
    fleet_mean: float   # fleet-weighted mean rate
    micro_base: float   # effective micro-kernel rate at network level
    e_b: float          # calibration baseline rate

    @property
    def mean_mu(self) -> float:
        return self.fleet_mean / self.e_b


def od_id(od: tuple[str, str]) -> str:
    return f"{od[0]}-{od[1]}"


class PhiProvider:
    """Demand-factor lookup with a global-monthly and unit fallback."""

    def __init__(self, factors: dict[tuple[str, int], float] | None = None,
                 global_monthly: dict[int, float] | None = None):
        self.factors = factors or {}
        self.global_monthly = global_monthly or {}

    def __call__(self, od: tuple[str, str] | str, month: int) -> float:
        key = od if isinstance(od, str) else od_id(od)
        if (key, month) in self.factors:
            return self.factors[(key, month)]
        return self.global_monthly.get(month, 1.0)


UNIT_PHI = PhiProvider()


@dataclass
class TripTable:
    """Per-trip quantities shared by every variant and by scenario analysis.

    Arrays are aligned and sorted by trip_id so reductions are bit-stable.
    """

    trip_ids: list[str]
    ods: list[tuple[str, str]]
    distance_miles: np.ndarray
    micro_g: np.ndarray     # base kernel grams per trip (typical day)
    mu: np.ndarray
    age: np.ndarray
    epa_rate: np.ndarray

    def __len__(self) -> int:
        return len(self.trip_ids)


def build_trip_table(store: TrajectoryStore, assignment: TypeAssignment,
                     registry: FleetRegistry, e_b: float,
                     table: CoefficientTable, category: str = "petrol car",
                     pollutant: str = "CO2", threads: int = 1) -> TripTable:
    trip_ids = store.trip_ids

    def emit(tid: str) -> float:
        return trajectory_emission(store[tid], table, category, pollutant)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            micro = np.array(list(pool.map(emit, trip_ids)))
    else:
        micro = np.array([emit(tid) for tid in trip_ids])
    idx = assignment.index_array(trip_ids)
    rates = registry.rates[idx]
    return TripTable(
        trip_ids=trip_ids,
        ods=[store[tid].od for tid in trip_ids],
        distance_miles=np.array([store.distance(tid) for tid in trip_ids]),
        micro_g=micro,
        mu=rates / e_b,
        age=registry.ages[idx],
        epa_rate=rates,
    )


def macro_daily(store: TrajectoryStore, gamma: float
                ) -> tuple[dict[tuple[str, str], float], float]:
    """Daily grams per OD: gamma times the OD's summed trip distance."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    total, per_od = store.vmt()
    return {od: gamma * d for od, d in per_od.items()}, gamma * total


def macro_monthly(daily: dict[tuple[str, str], float], profile: MonthProfile,
                  phi: PhiProvider = UNIT_PHI,
                  variant: EstimatorVariant = EstimatorVariant(MACRO),
                  rate_scale: float = 1.0) -> dict[tuple[str, str], float]:
    """Monthly grams per OD: daily x days x temp factor x phi.

    rate_scale replaces the base rate when type-adjusted (mean rate over
    gamma), applied multiplicatively.
    """
    t = profile.temp_factor if variant.temp_adjusted else 1.0
    scale = rate_scale if variant.type_adjusted else 1.0
    return {od: g * profile.n_days * t * phi(od, profile.month) * scale
            for od, g in daily.items()}


def micro_daily(tt: TripTable, type_adjusted: bool = False
                ) -> tuple[dict[tuple[str, str], float], float]:
    """Daily micro grams per OD, summed in trip_id order."""
    weights = tt.micro_g * (tt.mu if type_adjusted else 1.0)
    per_od: dict[tuple[str, str], float] = {}
    for od, g in zip(tt.ods, weights):
        per_od[od] = per_od.get(od, 0.0) + float(g)
    return dict(sorted(per_od.items())), float(weights.sum())


@dataclass
class EmissionReport:
    """Monthly-by-variant CO2 matrix in million metric tons."""

    months: list[int]
    labels: list[str]
    vmt_million_miles: np.ndarray
    columns: dict[str, np.ndarray]  # variant key -> 12 monthly values (Mt)
    metadata: dict = field(default_factory=dict)

    def annual(self, key: str) -> float:
        return float(self.columns[key].sum())

    @property
    def annual_vmt(self) -> float:
        return float(self.vmt_million_miles.sum())

    def to_rows(self) -> list[list]:
        keys = [v.key for v in ALL_VARIANTS if v.key in self.columns]
        header = ["month", "vmt_million_miles"] + keys
        rows = [header]
        for i, m in enumerate(self.months):
            rows.append([self.labels[i], round(self.vmt_million_miles[i], 3)]
                        + [round(float(self.columns[k][i]), 6) for k in keys])
        rows.append(["Annual", round(self.annual_vmt, 3)]
                    + [round(self.annual(k), 6) for k in keys])
        return rows

    def to_json(self) -> str:
        return json.dumps({
            "metadata": self.metadata,
            "months": self.months,
            "vmt_million_miles": [round(float(x), 6)
                                  for x in self.vmt_million_miles],
            "columns": {k: [round(float(x), 9) for x in col]
                        for k, col in sorted(self.columns.items())},
            "annual": {k: round(self.annual(k), 9)
                       for k in sorted(self.columns)},
        }, indent=2, sort_keys=True)


def estimate_from_monthly_vmt(monthly_vmt: dict[int, float], rates: RateSet,
                              profiles: list[MonthProfile],
                              metadata: dict | None = None) -> EmissionReport:
    """Evaluate all eight variants from a monthly VMT table (million miles).

    The VMT column already encodes day counts and demand factors, so only
    the temperature factor is applied on top of the per-variant rate.
    """
    months = [p.month for p in profiles]
    vmt = np.array([monthly_vmt[m] for m in months], dtype=float)
    temps = np.array([p.temp_factor for p in profiles])
    base_rate = {MACRO: rates.gamma, MICRO: rates.micro_base}
    type_scale = {MACRO: rates.fleet_mean / rates.gamma, MICRO: rates.mean_mu}
    columns = {}
    for variant in ALL_VARIANTS:
        rate = base_rate[variant.basis]
        if variant.type_adjusted:
            rate *= type_scale[variant.basis]
        t = temps if variant.temp_adjusted else 1.0
        columns[variant.key] = vmt * 1e6 * rate * t / GRAMS_PER_MILLION_TON
    return EmissionReport(months, [p.label for p in profiles], vmt, columns,
                          metadata or {})


def estimate_from_store(store: TrajectoryStore, tt: TripTable,
                        gamma: float, fleet_mean: float,
                        profiles: list[MonthProfile],
                        phi: PhiProvider = UNIT_PHI,
                        metadata: dict | None = None) -> EmissionReport:
    """Evaluate all eight variants from trajectories at desk scale."""
    _total_vmt, vmt_od = store.vmt()
    macro_od, _ = macro_daily(store, gamma)
    micro_od, _ = micro_daily(tt, type_adjusted=False)
    micro_type_od, _ = micro_daily(tt, type_adjusted=True)
    months = [p.month for p in profiles]
    ods = sorted(vmt_od)
    vmt_m = np.array([sum(vmt_od[od] * p.n_days * phi(od, p.month)
                          for od in ods) / 1e6 for p in profiles])
    daily = {
        EstimatorVariant(MACRO, False, False).key: macro_od,
        EstimatorVariant(MACRO, False, True).key:
            {od: g * fleet_mean / gamma for od, g in macro_od.items()},
        EstimatorVariant(MICRO, False, False).key: micro_od,
        EstimatorVariant(MICRO, False, True).key: micro_type_od,
    }
    columns = {}
    for variant in ALL_VARIANTS:
        base = daily[EstimatorVariant(variant.basis, False,
                                      variant.type_adjusted).key]
        col = np.zeros(len(profiles))
        for i, p in enumerate(profiles):
            t = p.temp_factor if variant.temp_adjusted else 1.0
            col[i] = sum(base[od] * p.n_days * t * phi(od, p.month)
                         for od in ods) / GRAMS_PER_MILLION_TON
        columns[variant.key] = col
    return EmissionReport(months, [p.label for p in profiles], vmt_m, columns,
                          metadata or {})


def estimate_matrix(*, store: TrajectoryStore | None = None,
                    trip_table: TripTable | None = None,
                    monthly_vmt: dict[int, float] | None = None,
                    rates: RateSet | None = None,
                    gamma: float | None = None,
                    fleet_mean: float | None = None,
                    profiles: list[MonthProfile],
                    phi: PhiProvider = UNIT_PHI,
                    metadata: dict | None = None) -> EmissionReport:
    """Dispatch to the VMT-table or trajectory evaluation path."""
    if monthly_vmt is not None:
        if rates is None:
            raise ValueError("monthly_vmt path needs a RateSet")
        return estimate_from_monthly_vmt(monthly_vmt, rates, profiles, metadata)
    if store is None or trip_table is None or gamma is None or fleet_mean is None:
        raise ValueError("store path needs store, trip_table, gamma, fleet_mean")
    return estimate_from_store(store, trip_table, gamma, fleet_mean,
                               profiles, phi, metadata)
