"""EV energy demand, charger share, and benefit/cost accounting.

Energy unit is BWh = 10^9 Wh (= GWh).  Annual EV energy demand is
VMT x share / battery performance; the DC-fast-charger share compares the
charging-network fixture's daily MWh (365-day annualization) against that
total.  The benefit side is the societal cost of the CO2 saved; the cost
side is the straight-line annual share of the 10-year infrastructure
investment (capital-recovery annuity when a nonzero rate is configured).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources


class EconError(Exception):
    pass


@dataclass(frozen=True)
class TechScenario:
    name: str                 # Low-Tech | Mixed-Tech | High-Tech
    market_share: float
    n_stations: int
    n_chargers: int
    infra_cost_10yr: float    # million $
    station_daily_mwh: float  # MWh/day

    def __post_init__(self):
        if self.infra_cost_10yr < 0 or self.station_daily_mwh < 0:
            raise EconError(f"{self.name}: costs and energies must be >= 0")


@dataclass(frozen=True)
class EconConfig:
    battery_perf: float = 3.5    # miles/kWh
    co2_cost: float = 50.0       # $/ton
    infra_lifetime: float = 10.0  # years
    inflation: float = 0.0

    def __post_init__(self):
        if min(self.battery_perf, self.co2_cost, self.infra_lifetime) <= 0:
            raise EconError("battery_perf, co2_cost, infra_lifetime must be > 0")
        if self.inflation < 0:
            raise EconError("inflation must be >= 0")


def load_tech_scenarios(path=None) -> list[TechScenario]:
    """Charging-network fixture CSV; defaults to the packaged table."""
    if path is None:
        res = resources.files("emitron.data") / "tech_scenarios.csv"
        with resources.as_file(res) as p:
            return load_tech_scenarios(p)
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append(TechScenario(row["name"].strip(),
                                    float(row["market_share"]),
                                    int(row["n_stations"]),
                                    int(row["n_chargers"]),
                                    float(row["infra_cost_10yr_musd"]),
                                    float(row["station_daily_mwh"])))
    return out


def total_energy_demand(annual_vmt_million_miles: float, share: float,
                        cfg: EconConfig) -> float:
    """Annual EV energy demand in BWh (million miles x share / (mi/kWh))."""
    if annual_vmt_million_miles < 0 or share < 0:
        raise EconError("VMT and share must be non-negative")
    return annual_vmt_million_miles * share / cfg.battery_perf / 1000.0


def charger_share(station_daily_mwh: float, total_annual_bwh: float
                  ) -> tuple[float, float]:
    """(annual station BWh, percent of total demand) with 365-day years."""
    if total_annual_bwh <= 0:
        raise EconError("total annual demand must be positive")
    annual = station_daily_mwh * 365.0 / 1000.0
    return annual, 100.0 * annual / total_annual_bwh


def societal_cost(savings_mt: float, cfg: EconConfig) -> float:
    """Million $ per year for the given CO2 savings (Mt x $/ton -> M$)."""
    if savings_mt < 0:
        raise EconError("savings must be non-negative")
    return savings_mt * cfg.co2_cost


def annual_infra_cost(tech: TechScenario, cfg: EconConfig) -> float:
    """Annualized infrastructure cost in M$ (straight line at zero rate)."""
    if cfg.inflation == 0:
        return tech.infra_cost_10yr / cfg.infra_lifetime
    r, n = cfg.inflation, cfg.infra_lifetime
    return tech.infra_cost_10yr * r / (1.0 - (1.0 + r) ** -n)


def benefit_cost(annual_societal_musd: float, tech: TechScenario,
                 cfg: EconConfig) -> float:
    if tech.infra_cost_10yr <= 0:
        raise EconError("infra_cost_10yr must be positive")
    return annual_societal_musd / annual_infra_cost(tech, cfg)


@dataclass(frozen=True)
class EnergyRow:
    share: float
    tech: str
    total_annual_bwh: float
    station_annual_bwh: float
    charger_share_pct: float


def energy_grid(annual_vmt_million_miles: float, techs: list[TechScenario],
                cfg: EconConfig) -> list[EnergyRow]:
    rows = []
    for tech in sorted(techs, key=lambda t: (t.market_share, t.name)):
        total = total_energy_demand(annual_vmt_million_miles,
                                    tech.market_share, cfg)
        annual, pct = charger_share(tech.station_daily_mwh, total)
        rows.append(EnergyRow(tech.market_share, tech.name, total, annual, pct))
    return rows


@dataclass(frozen=True)
class EconRow:
    share: float
    tech: str
    annual_societal_musd: float
    annual_infra_musd: float
    bc_ratio: float


def economics_grid(savings_by_share: dict[float, float],
                   techs: list[TechScenario], cfg: EconConfig) -> list[EconRow]:
    """Benefit/cost table: one row per (share, tech scenario) pair."""
    rows = []
    for tech in sorted(techs, key=lambda t: (t.market_share, t.name)):
        if tech.market_share not in savings_by_share:
            continue
        societal = societal_cost(savings_by_share[tech.market_share], cfg)
        infra = annual_infra_cost(tech, cfg)
        rows.append(EconRow(tech.market_share, tech.name, societal, infra,
                            societal / infra))
    return rows
