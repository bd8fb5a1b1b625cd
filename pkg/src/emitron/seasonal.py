"""Monthly calendar profiles and demand-factor estimation.

Month profiles carry day counts and the cold-weather emission multiplier
(1.11 for December through March by default, overridable).  Demand factors
phi scale base-day OD flows to each month; they are fit to continuous
counting-station volumes by iterative proportional fitting with a
geometric-mean update.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

MONTH_DAYS = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
MONTH_LABELS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
                "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

DEFAULT_COLD_MONTHS = (12, 1, 2, 3)
DEFAULT_COLD_FACTOR = 1.11


class FactorError(Exception):
    pass


@dataclass(frozen=True)
class MonthProfile:
    month: int          # 1-12
    n_days: int
    temp_factor: float
    label: str


def month_profiles(year_days: int = 365,
                   cold_factor: float = DEFAULT_COLD_FACTOR,
                   cold_months=DEFAULT_COLD_MONTHS,
                   temp_overrides: dict[int, float] | None = None
                   ) -> list[MonthProfile]:
    """Twelve MonthProfile records for a 365- or 366-day year."""
    if year_days not in (365, 366):
        raise FactorError("year_days must be 365 or 366")
    if cold_factor <= 0:
        raise FactorError("temperature factor must be positive")
    profiles = []
    for m in range(1, 13):
        days = MONTH_DAYS[m - 1] + (1 if m == 2 and year_days == 366 else 0)
        t = cold_factor if m in cold_months else 1.0
        if temp_overrides and m in temp_overrides:
            t = temp_overrides[m]
        if t <= 0:
            raise FactorError(f"temperature factor for month {m} must be > 0")
        profiles.append(MonthProfile(m, days, t, MONTH_LABELS[m - 1]))
    return profiles


@dataclass(frozen=True)
class StationObservation:
    station_id: str
    month: int
    volume: float  # mean daily vehicles

    def __post_init__(self):
        if self.volume < 0:
            raise FactorError(f"station {self.station_id}: negative volume")


def load_observations(path) -> list[StationObservation]:
    """CSV: ``station_id,month,mean_daily_volume``."""
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append(StationObservation(row["station_id"].strip(),
                                          int(row["month"]),
                                          float(row["mean_daily_volume"])))
    return out


def load_incidence(path) -> dict[tuple[str, str], float]:
    """CSV: ``od_id,station_id,contribution`` (base-day vehicles/day)."""
    out = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out[(row["od_id"].strip(), row["station_id"].strip())] = \
                float(row["contribution"])
    return out


@dataclass
class FactorEstimate:
    phi: dict[str, float]
    converged: bool
    iterations: int
    max_rel_error: float
    fallback_ods: list[str] = field(default_factory=list)


def estimate_monthly_factors(incidence: dict[tuple[str, str], float],
                             observed: dict[str, float],
                             eps: float = 1e-3,
                             max_iter: int = 100) -> FactorEstimate:
    """Fit per-OD factors so modeled station volumes match observations.

    Update rule: phi_i <- phi_i * geometric mean over the OD's stations of
    observed(s) / modeled(s), iterated until the worst relative station
    mismatch drops below eps or the iteration cap is hit (then the best
    iterate is returned flagged as unconverged).  ODs crossing no observed
    station fall back to the network-wide observed/modeled ratio.
    """
    ods = sorted({od for od, _s in incidence})
    stations = sorted(s for s in observed if observed[s] > 0)
    if not ods or not stations:
        raise FactorError("need at least one OD and one observed station")
    a = np.zeros((len(stations), len(ods)))
    s_index = {s: i for i, s in enumerate(stations)}
    od_index = {od: j for j, od in enumerate(ods)}
    for (od, s), contrib in incidence.items():
        if contrib < 0:
            raise FactorError(f"negative contribution for ({od}, {s})")
        if s in s_index:
            a[s_index[s], od_index[od]] += contrib
    obs = np.array([observed[s] for s in stations])
    covered = a.sum(axis=0) > 0
    fallback_ods = [od for od, c in zip(ods, covered) if not c]

    phi = np.ones(len(ods))
    base = a @ phi
    usable = base > 0  # stations with modeled base flow
    if not np.all(usable):
        a, obs = a[usable], obs[usable]
    network_ratio = float(obs.sum() / (a @ phi).sum())

    best_phi, best_err = phi.copy(), np.inf
    it = 0
    for it in range(1, max_iter + 1):
        modeled = a @ phi
        err = float(np.max(np.abs(obs - modeled) / obs))
        if err < best_err:
            best_err, best_phi = err, phi.copy()
        if err < eps:
            break
        ratio = obs / modeled
        with np.errstate(divide="ignore"):
            log_ratio = np.log(ratio)
        for j in np.nonzero(covered)[0]:
            rows = a[:, j] > 0
            if rows.any():
                phi[j] *= float(np.exp(log_ratio[rows].mean()))
    converged = best_err < eps
    phi = best_phi
    phi[~covered] = network_ratio
    return FactorEstimate({od: float(p) for od, p in zip(ods, phi)},
                          converged, it, best_err, fallback_ods)


def estimate_factors_by_month(incidence: dict[tuple[str, str], float],
                              observations: list[StationObservation],
                              eps: float = 1e-3, max_iter: int = 100
                              ) -> tuple[dict[tuple[str, int], float],
                                         dict[int, FactorEstimate]]:
    """Run the monthly fit independently for every observed month."""
    by_month: dict[int, dict[str, float]] = {}
    for obs in observations:
        by_month.setdefault(obs.month, {})[obs.station_id] = obs.volume
    factors: dict[tuple[str, int], float] = {}
    reports: dict[int, FactorEstimate] = {}
    for month in sorted(by_month):
        est = estimate_monthly_factors(incidence, by_month[month], eps, max_iter)
        reports[month] = est
        for od, p in est.phi.items():
            factors[(od, month)] = p
    return factors, reports


def write_factors_csv(factors: dict[tuple[str, int], float], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["od_id", "month", "phi"])
        for (od, month), phi in sorted(factors.items()):
            w.writerow([od, month, f"{phi:.6f}"])
