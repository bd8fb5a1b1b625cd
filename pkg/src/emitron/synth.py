"""Deterministic synthetic trajectory generation.

Stand-in for an external traffic simulator: builds per-second speed
profiles (ramp up, cruise, optional mid-trip stop cycles, ramp down) whose
rectangle-rule distance lands within 1% of a target, with optional
zero-mean speed noise.  Everything is a pure function of the profile spec
and the trip id, so generation is schedule-independent.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .seeding import stable_seed
from .store import METERS_PER_MILE, Trajectory, TrajectoryStore, derive_acceleration


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileSpec:
    cruise_speed: float          # m/s
    accel_rate: float = 1.5      # m/s^2
    decel_rate: float = 1.5      # m/s^2, magnitude
    target_distance: float = 5.0  # miles
    n_stops: int = 0
    noise_amp: float = 0.0       # m/s
    seed: int = 0

    def __post_init__(self):
        if self.cruise_speed <= 0 or self.accel_rate <= 0 or self.decel_rate <= 0:
            raise ProfileError("cruise_speed, accel_rate, decel_rate must be > 0")
        if self.noise_amp < 0 or self.n_stops < 0 or self.target_distance <= 0:
            raise ProfileError("noise_amp, n_stops, target_distance must be >= 0")


def _ramp_up(cruise: float, rate: float) -> np.ndarray:
    """Speeds after each 1 s acceleration step from 0 up to cruise."""
    speeds = np.arange(rate, cruise, rate)
    return np.append(speeds, cruise)


def _ramp_down(cruise: float, rate: float) -> np.ndarray:
    speeds = np.arange(cruise - rate, 0.0, -rate)
    return np.append(speeds, 0.0)


@lru_cache(maxsize=256)
def _base_profile(cruise: float, accel: float, decel: float,
                  target_miles: float, n_stops: int) -> tuple:
    """Noise-free speed profile hitting the target distance.

    Cruise durations are solved analytically (no feedback controller), so
    the distance error is bounded by one cruise-speed sample.
    """
    up = _ramp_up(cruise, accel)
    down = _ramp_down(cruise, decel)
    cycle = np.concatenate([down, up])  # mid-trip stop: decel, dwell at 0, accel
    target_m = target_miles * METERS_PER_MILE
    fixed = up.sum() + n_stops * cycle.sum() + down.sum()
    n_cruise = round((target_m - fixed) / cruise)
    n_segments = n_stops + 1
    if target_m <= fixed or n_cruise < n_segments:
        raise ProfileError(
            f"target_distance {target_miles:g} mi too short for the ramp "
            f"cycles at cruise {cruise:g} m/s with {n_stops} stops")
    seg_len, extra = divmod(n_cruise, n_segments)
    parts = [np.zeros(1), up]
    for seg in range(n_segments):
        n = seg_len + (1 if seg < extra else 0)
        parts.append(np.full(n, cruise))
        parts.append(cycle if seg < n_stops else down)
    return tuple(np.concatenate(parts))


def _limit_accel(v: np.ndarray, a_max: float, dt: float) -> np.ndarray:
    out = v.copy()
    for k in range(1, len(out)):
        lo, hi = out[k - 1] - a_max * dt, out[k - 1] + a_max * dt
        if out[k] < lo:
            out[k] = lo
        elif out[k] > hi:
            out[k] = hi
    return np.maximum(out, 0.0)


def generate_trajectory(spec: ProfileSpec, trip_id: str,
                        od: tuple[str, str], a_max: float = 10.0) -> Trajectory:
    """Generate one trajectory; identical (spec, trip_id) give identical output.

    Noise is applied to the speeds and accelerations are re-derived, which
    keeps the kinematics consistent; noise is only added where the base
    profile clears the amplitude so speeds stay >= 0 and the mean shift is
    exactly zero.
    """
    base = np.array(_base_profile(spec.cruise_speed, spec.accel_rate,
                                  spec.decel_rate, spec.target_distance,
                                  spec.n_stops))
    v = base
    if spec.noise_amp > 0:
        rng = np.random.default_rng(stable_seed(spec.seed, trip_id))
        noise = spec.noise_amp * rng.uniform(-1.0, 1.0, len(base))
        v = base + np.where(base >= spec.noise_amp, noise, 0.0)
        if 2 * spec.noise_amp + max(spec.accel_rate, spec.decel_rate) > a_max:
            v = _limit_accel(v, a_max, 1.0)
    traj = Trajectory(trip_id, od[0], od[1], v, None, step=1.0)
    return derive_acceleration(traj)


def generate_fleet_of_trips(n_trips: int, od_weights: dict[tuple[str, str], float],
                            template: ProfileSpec, master_seed: int) -> TrajectoryStore:
    """Generate a store of n_trips; ODs sampled proportional to weights.

    Per-trip seeds come from hash(master_seed, trip_id), so the output is
    independent of generation order.
    """
    if n_trips <= 0:
        raise ProfileError("n_trips must be positive")
    ods = sorted(od_weights)
    weights = np.array([od_weights[od] for od in ods], dtype=float)
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ProfileError("od_weights must be non-negative, not all zero")
    cum = np.cumsum(weights)
    spec = replace(template, seed=master_seed)
    trips = {}
    for i in range(n_trips):
        tid = f"t{i:06d}"
        u = np.random.default_rng(stable_seed(master_seed, tid, "od")).random()
        od = ods[int(np.searchsorted(cum, u * cum[-1], side="right"))]
        trips[tid] = generate_trajectory(spec, tid, od)
    return TrajectoryStore(trips)
