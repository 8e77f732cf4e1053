"""Shared data model for depot-charging planning.

Time is a contiguous grid of variable-length steps, each lying inside a
single price hour.  Vehicles carry per-step operating depletion and
charging availability; plans are per-step charging powers together with
the SoC trajectory they induce.  All types are immutable after
construction and cost evaluation is pure, so instances can be shared
freely across worker processes.

Units: power in kW, energy in kWh, SoC in percent of battery capacity,
durations in hours, prices in currency per kWh.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np

# Charging is only allowed in idle windows at least this long.
MIN_IDLE_HOURS = 0.5

# Slack on duration arithmetic (hours); 1e-6 h is 3.6 ms.
TIME_TOL_H = 1e-6

# Slack on SoC / power feasibility comparisons.  Wide enough to accept
# solutions produced by an LP solver at its feasibility tolerance.
SOC_ATOL = 1e-6

# Absolute tolerance on currency amounts in equality assertions.
COST_ATOL = 1e-9


class InputError(ValueError):
    """Invalid or inconsistent input data."""


def hour_floor(instant: datetime) -> datetime:
    """Start of the price hour containing ``instant``."""
    return instant.replace(minute=0, second=0, microsecond=0)


def soc_gain_percent(power_kw, duration_h, capacity_kwh):
    """SoC percentage points gained by charging at ``power_kw`` for ``duration_h``."""
    return 100.0 * power_kw * duration_h / capacity_kwh


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _require_naive(instant: datetime, what: str) -> datetime:
    if instant.tzinfo is not None:
        raise InputError(f"{what} must be a naive timestamp, got {instant.isoformat()}")
    return instant


@dataclass(frozen=True)
class TimeGrid:
    """Ordered, contiguous planning steps covering one labelled month."""

    starts: tuple[datetime, ...]
    durations_h: np.ndarray
    month_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "starts", tuple(self.starts))
        object.__setattr__(self, "durations_h", _frozen_array(self.durations_h))
        if len(self.starts) != len(self.durations_h):
            raise InputError("one duration per step start is required")
        if len(self.starts) == 0:
            raise InputError("a time grid needs at least one step")
        for i, (start, dur) in enumerate(zip(self.starts, self.durations_h)):
            _require_naive(start, f"step {i} start")
            if not dur > 0.0:
                raise InputError(f"step {i} has non-positive duration {dur}")
            if dur > 1.0 + TIME_TOL_H:
                raise InputError(f"step {i} duration {dur} h exceeds one hour")
            end = start + timedelta(hours=float(dur))
            hour_end = hour_floor(start) + timedelta(hours=1)
            if end > hour_end + timedelta(hours=TIME_TOL_H):
                raise InputError(
                    f"step {i} starting {start.isoformat()} crosses the hour"
                    f" boundary at {hour_end.isoformat()}"
                )
            if i + 1 < len(self.starts):
                gap_h = abs((self.starts[i + 1] - end).total_seconds()) / 3600.0
                if gap_h > TIME_TOL_H:
                    raise InputError(f"steps {i} and {i + 1} are not contiguous")

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def n_steps(self) -> int:
        return len(self.starts)

    def step_end(self, index: int) -> datetime:
        return self.starts[index] + timedelta(hours=float(self.durations_h[index]))

    @property
    def span(self) -> tuple[datetime, datetime]:
        """First step start and last step end."""
        return self.starts[0], self.step_end(len(self.starts) - 1)


def build_time_grid(
    span_start: datetime,
    span_end: datetime,
    month_id: str,
    events: Iterable[datetime] = (),
) -> TimeGrid:
    """Build a grid whose step boundaries are the union of hour marks and events.

    Events outside ``[span_start, span_end]`` are ignored.  Every resulting
    step lies inside a single price hour, so per-step prices are well defined.
    """
    _require_naive(span_start, "span start")
    _require_naive(span_end, "span end")
    if span_end <= span_start:
        raise InputError("span end must come after span start")
    marks = {span_start, span_end}
    hour = hour_floor(span_start) + timedelta(hours=1)
    while hour < span_end:
        marks.add(hour)
        hour += timedelta(hours=1)
    for event in events:
        _require_naive(event, "event instant")
        if span_start < event < span_end:
            marks.add(event)
    ordered = sorted(marks)
    starts = tuple(ordered[:-1])
    durations = [
        (b - a).total_seconds() / 3600.0 for a, b in zip(ordered[:-1], ordered[1:])
    ]
    return TimeGrid(starts=starts, durations_h=np.array(durations), month_id=month_id)


@dataclass(frozen=True)
class SpotPriceSeries:
    """Hourly day-ahead prices, keyed by the start of each hour."""

    hourly: Mapping[datetime, float]
    currency: str = "EUR"

    def __post_init__(self) -> None:
        clean: dict[datetime, float] = {}
        for hour, price in dict(self.hourly).items():
            _require_naive(hour, "price hour")
            if hour != hour_floor(hour):
                raise InputError(f"price key {hour.isoformat()} is not on the hour")
            if price < 0.0:
                raise InputError(f"negative spot price {price} at {hour.isoformat()}")
            clean[hour] = float(price)
        object.__setattr__(self, "hourly", clean)

    def price_at(self, instant: datetime) -> float:
        hour = hour_floor(instant)
        try:
            return self.hourly[hour]
        except KeyError:
            raise InputError(f"no spot price for hour {hour.isoformat()}") from None

    def for_grid(self, grid: TimeGrid) -> np.ndarray:
        """Per-step prices; each step is priced by the hour containing its start."""
        return np.array([self.price_at(start) for start in grid.starts])


@dataclass(frozen=True)
class TariffModel:
    """Peak-power tariff and the discrete candidate caps the planner sweeps."""

    peak_price_per_kw: float
    grid_cap_kw: float
    candidate_lo_kw: float
    candidate_hi_kw: float
    candidate_step_kw: float

    def __post_init__(self) -> None:
        if self.peak_price_per_kw < 0.0:
            raise InputError("peak price must be non-negative")
        if not 0.0 <= self.candidate_lo_kw <= self.candidate_hi_kw:
            raise InputError("candidate window must satisfy 0 <= lo <= hi")
        if self.candidate_hi_kw > self.grid_cap_kw + 1e-9:
            raise InputError("candidate window must stay within the grid connection cap")
        if self.candidate_step_kw <= 0.0:
            raise InputError("candidate step must be positive")
        n = (self.candidate_hi_kw - self.candidate_lo_kw) / self.candidate_step_kw
        if abs(n - round(n)) > 1e-9:
            raise InputError("candidate window is not a whole number of steps")

    def candidates(self) -> np.ndarray:
        """Ascending candidate peak caps, endpoints included."""
        n = int(round((self.candidate_hi_kw - self.candidate_lo_kw) / self.candidate_step_kw))
        return self.candidate_lo_kw + self.candidate_step_kw * np.arange(n + 1)


@dataclass(frozen=True)
class BatteryParams:
    """Battery size, SoC operating band, and the terminal SoC requirement."""

    capacity_kwh: float
    soc_min: float
    soc_max: float
    soc_init: float
    soc_target: float
    epsilon: float = 1.0

    def __post_init__(self) -> None:
        if self.capacity_kwh <= 0.0:
            raise InputError("battery capacity must be positive")
        if not 0.0 <= self.soc_min < self.soc_max <= 100.0:
            raise InputError("SoC band must satisfy 0 <= soc_min < soc_max <= 100")
        if not self.soc_min <= self.soc_init <= self.soc_max:
            raise InputError("initial SoC must lie within the SoC band")
        if not self.soc_min <= self.soc_target <= self.soc_max:
            raise InputError("target SoC must lie within the SoC band")
        if self.epsilon < 0.0:
            raise InputError("terminal tolerance must be non-negative")


@dataclass(frozen=True)
class VehicleProfile:
    """Per-step operating depletion and charging availability of one vehicle.

    ``delta_soc_op`` is the SoC (percent) consumed by operations during each
    step.  ``idle_window_h`` is the length of the contiguous idle window a
    step belongs to (0 for operating steps).  A step is available for
    charging only if it has no depletion and its idle window is at least
    ``MIN_IDLE_HOURS`` long.
    """

    vehicle_id: str
    battery: BatteryParams
    charger_max_kw: float
    delta_soc_op: np.ndarray
    idle_window_h: np.ndarray
    available: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta_soc_op", _frozen_array(self.delta_soc_op))
        object.__setattr__(self, "idle_window_h", _frozen_array(self.idle_window_h))
        object.__setattr__(self, "available", _frozen_array(self.available, dtype=bool))
        if self.charger_max_kw <= 0.0:
            raise InputError("charger rating must be positive")
        n = len(self.delta_soc_op)
        if len(self.idle_window_h) != n or len(self.available) != n:
            raise InputError("profile arrays must share one length")
        if np.any(self.delta_soc_op < 0.0):
            raise InputError("operating depletion must be non-negative")
        bad = self.available & (
            (self.delta_soc_op > 0.0) | (self.idle_window_h < MIN_IDLE_HOURS - 1e-9)
        )
        if np.any(bad):
            step = int(np.argmax(bad))
            raise InputError(
                f"step {step} marked available despite depletion or a short idle window"
            )

    @property
    def n_steps(self) -> int:
        return len(self.delta_soc_op)

    def energy_requirement_kwh(self) -> float:
        """Energy needed to cover all operations and land on the target SoC."""
        b = self.battery
        soc_need = float(np.sum(self.delta_soc_op)) + (b.soc_target - b.soc_init)
        return b.capacity_kwh * soc_need / 100.0


@dataclass(frozen=True)
class ChargingPlan:
    """Per-step charging powers and the induced SoC trajectory.

    ``soc`` has one more entry than ``power_kw``; ``soc[0]`` is the SoC at
    the start of the horizon and ``soc[t + 1]`` the SoC after step ``t``.
    Constraint violations are reported by :func:`validate_plan`, not by
    construction, so descriptive plans (e.g. reconstructions of logged,
    uncontrolled charging) can be represented too.
    """

    vehicle_id: str
    power_kw: np.ndarray
    soc: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "power_kw", _frozen_array(self.power_kw))
        object.__setattr__(self, "soc", _frozen_array(self.soc))
        if len(self.soc) != len(self.power_kw) + 1:
            raise InputError("SoC trajectory must have one more entry than powers")

    @property
    def n_steps(self) -> int:
        return len(self.power_kw)


def soc_trajectory(profile: VehicleProfile, grid: TimeGrid, power_kw) -> np.ndarray:
    """SoC trajectory induced by charging powers, starting at the initial SoC."""
    power = np.asarray(power_kw, dtype=float)
    if len(power) != grid.n_steps or profile.n_steps != grid.n_steps:
        raise InputError("power series, profile, and grid must share one length")
    gains = soc_gain_percent(power, grid.durations_h, profile.battery.capacity_kwh)
    soc = np.empty(len(power) + 1)
    soc[0] = profile.battery.soc_init
    np.cumsum(gains - profile.delta_soc_op, out=soc[1:])
    soc[1:] += profile.battery.soc_init
    return soc


def build_plan(profile: VehicleProfile, grid: TimeGrid, power_kw) -> ChargingPlan:
    """Plan with the SoC trajectory recomputed from the transition rule."""
    return ChargingPlan(
        vehicle_id=profile.vehicle_id,
        power_kw=np.asarray(power_kw, dtype=float),
        soc=soc_trajectory(profile, grid, power_kw),
    )


@dataclass(frozen=True)
class FleetInstance:
    """One month of planning input: grid, prices, tariff, and vehicle profiles."""

    grid: TimeGrid
    prices: SpotPriceSeries
    tariff: TariffModel
    profiles: tuple[VehicleProfile, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if not self.profiles:
            raise InputError("an instance needs at least one vehicle")
        ids = [p.vehicle_id for p in self.profiles]
        if len(set(ids)) != len(ids):
            raise InputError("vehicle ids must be unique")
        for p in self.profiles:
            if p.n_steps != self.grid.n_steps:
                raise InputError(
                    f"profile {p.vehicle_id} has {p.n_steps} steps, grid has {self.grid.n_steps}"
                )
        # Fail fast on price gaps instead of mid-solve.
        self.prices.for_grid(self.grid)

    @property
    def n_vehicles(self) -> int:
        return len(self.profiles)

    def profile_by_id(self, vehicle_id: str) -> VehicleProfile:
        for p in self.profiles:
            if p.vehicle_id == vehicle_id:
                return p
        raise InputError(f"unknown vehicle id {vehicle_id!r}")


def energy_cost(plan: ChargingPlan, prices: SpotPriceSeries, grid: TimeGrid) -> float:
    """Spot cost of one plan: sum over steps of power * price * duration."""
    if plan.n_steps != grid.n_steps:
        raise InputError("plan and grid must share one length")
    step_prices = prices.for_grid(grid)
    return float(np.dot(plan.power_kw, step_prices * grid.durations_h))


def aggregate_power(plans: Sequence[ChargingPlan], n_steps: int) -> np.ndarray:
    """Per-step fleet charging power."""
    total = np.zeros(n_steps)
    for plan in plans:
        if plan.n_steps != n_steps:
            raise InputError(f"plan {plan.vehicle_id} does not match the grid length")
        total += plan.power_kw
    return total


@dataclass(frozen=True)
class FleetCost:
    """Energy cost, demand charge, and the realized fleet peak behind it."""

    energy: float
    demand: float
    peak_kw: float

    @property
    def total(self) -> float:
        return self.energy + self.demand


def fleet_total_cost(plans: Sequence[ChargingPlan], instance: FleetInstance) -> FleetCost:
    """Fleet cost with the demand charge priced at the realized peak."""
    plan_ids = sorted(p.vehicle_id for p in plans)
    profile_ids = sorted(p.vehicle_id for p in instance.profiles)
    if plan_ids != profile_ids:
        raise InputError("plans do not cover exactly the instance's vehicles")
    energy = sum(energy_cost(plan, instance.prices, instance.grid) for plan in plans)
    peak = float(np.max(aggregate_power(plans, instance.grid.n_steps)))
    demand = instance.tariff.peak_price_per_kw * peak
    return FleetCost(energy=float(energy), demand=demand, peak_kw=peak)


@dataclass(frozen=True)
class Violation:
    """One constraint violation found in a plan: what, where, and by how much."""

    constraint: str
    step: int | None
    magnitude: float
    message: str


def validate_plan(
    plan: ChargingPlan,
    profile: VehicleProfile,
    grid: TimeGrid,
    atol: float = SOC_ATOL,
) -> list[Violation]:
    """Check a plan against every per-vehicle constraint.

    Returns one entry per violated constraint occurrence: power outside
    [0, charger rating], charging while unavailable, SoC transition
    mismatch, SoC band violations, and a missed terminal target.  An
    empty list means the plan is feasible for this vehicle.
    """
    if plan.n_steps != grid.n_steps or profile.n_steps != grid.n_steps:
        raise InputError("plan, profile, and grid must share one length")
    b = profile.battery
    out: list[Violation] = []
    expected = soc_trajectory(profile, grid, plan.power_kw)
    if abs(float(plan.soc[0]) - b.soc_init) > atol:
        out.append(
            Violation(
                constraint="initial_soc",
                step=0,
                magnitude=abs(float(plan.soc[0]) - b.soc_init),
                message=f"trajectory starts at {plan.soc[0]:.6f}%, not at {b.soc_init}%",
            )
        )
    for t in range(plan.n_steps):
        p = float(plan.power_kw[t])
        if p < -atol or p > profile.charger_max_kw + atol:
            excess = max(-p, p - profile.charger_max_kw)
            out.append(
                Violation(
                    constraint="power_range",
                    step=t,
                    magnitude=excess,
                    message=f"step {t}: power {p:.6f} kW outside [0, {profile.charger_max_kw}] kW",
                )
            )
        if not profile.available[t] and p > atol:
            out.append(
                Violation(
                    constraint="availability",
                    step=t,
                    magnitude=p,
                    message=f"step {t}: charging at {p:.6f} kW while unavailable",
                )
            )
        drift = abs(float(plan.soc[t + 1]) - (float(plan.soc[t]) + (expected[t + 1] - expected[t])))
        if drift > atol:
            out.append(
                Violation(
                    constraint="soc_transition",
                    step=t,
                    magnitude=drift,
                    message=f"step {t}: SoC update off by {drift:.6g} percentage points",
                )
            )
    for t, soc in enumerate(plan.soc):
        soc = float(soc)
        if soc < b.soc_min - atol:
            out.append(
                Violation(
                    constraint="soc_min",
                    step=t,
                    magnitude=b.soc_min - soc,
                    message=f"SoC {soc:.6f}% below the floor {b.soc_min}% after step {t - 1}"
                    if t else f"initial SoC {soc:.6f}% below the floor {b.soc_min}%",
                )
            )
        if soc > b.soc_max + atol:
            out.append(
                Violation(
                    constraint="soc_max",
                    step=t,
                    magnitude=soc - b.soc_max,
                    message=f"SoC {soc:.6f}% above the ceiling {b.soc_max}% after step {t - 1}"
                    if t else f"initial SoC {soc:.6f}% above the ceiling {b.soc_max}%",
                )
            )
    terminal_err = abs(float(plan.soc[-1]) - b.soc_target)
    if terminal_err > b.epsilon + atol:
        out.append(
            Violation(
                constraint="terminal_target",
                step=None,
                magnitude=terminal_err - b.epsilon,
                message=f"terminal SoC {plan.soc[-1]:.6f}% misses {b.soc_target}% +/- {b.epsilon}%",
            )
        )
    return out
