"""Session detection and profile construction from operational logs.

A log is a time-ordered stream of (timestamp, soc, state) samples per
vehicle, with state either "operating" or "idle".  Contiguous operating
samples form an operation; the SoC gain observed between one operation's
last sample and the next operation's first sample is attributed to an
uncontrolled charging session at a fixed nominal power, placed at the
start of the idle gap.  Gains under one SoC point are ignored: the logs
record SoC at whole-percent resolution, so smaller differences are noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .model import (
    MIN_IDLE_HOURS,
    TIME_TOL_H,
    BatteryParams,
    InputError,
    SpotPriceSeries,
    TariffModel,
    TimeGrid,
    VehicleProfile,
    build_time_grid,
)

DEFAULT_SESSION_POWER_KW = 5.0
SOC_RESOLUTION = 1.0


class DataInconsistencyError(InputError):
    """The log contradicts the charging model it is being read under."""


@dataclass(frozen=True)
class LogSample:
    timestamp: datetime
    soc_percent: float
    state: str


@dataclass(frozen=True)
class Operation:
    """One contiguous operating run, first to last operating sample."""

    start: datetime
    end: datetime
    soc_start: float
    soc_end: float

    @property
    def drop(self) -> float:
        return self.soc_start - self.soc_end

    @property
    def duration_h(self) -> float:
        return (self.end - self.start).total_seconds() / 3600.0


@dataclass(frozen=True)
class OperationLog:
    vehicle_id: str
    samples: tuple[LogSample, ...]

    def __post_init__(self) -> None:
        if not self.samples:
            raise InputError(f"log for {self.vehicle_id!r} has no samples")
        for prev, cur in zip(self.samples, self.samples[1:]):
            if cur.timestamp <= prev.timestamp:
                raise InputError(
                    f"log for {self.vehicle_id!r} is not strictly time-ordered"
                    f" at {cur.timestamp.isoformat()}"
                )
        for s in self.samples:
            if s.state not in ("operating", "idle"):
                raise InputError(
                    f"log for {self.vehicle_id!r} has unknown state {s.state!r}"
                )
            if not 0.0 <= s.soc_percent <= 100.0:
                raise InputError(
                    f"log for {self.vehicle_id!r} has SoC {s.soc_percent} outside [0, 100]"
                )

    def operations(self) -> list[Operation]:
        ops: list[Operation] = []
        run: list[LogSample] = []
        for s in self.samples:
            if s.state == "operating":
                run.append(s)
                continue
            if run:
                ops.append(self._close_run(run))
                run = []
        if run:
            ops.append(self._close_run(run))
        return ops

    def _close_run(self, run: list[LogSample]) -> Operation:
        op = Operation(
            start=run[0].timestamp,
            end=run[-1].timestamp,
            soc_start=run[0].soc_percent,
            soc_end=run[-1].soc_percent,
        )
        if op.soc_end > op.soc_start + SOC_RESOLUTION:
            raise DataInconsistencyError(
                f"vehicle {self.vehicle_id!r}: SoC rose {op.soc_end - op.soc_start:.1f}"
                f" points during the operation starting {op.start.isoformat()}"
            )
        return op


@dataclass(frozen=True)
class ChargingSession:
    """Uncontrolled constant-power charging inferred from an idle-gap gain."""

    vehicle_id: str
    start: datetime
    duration_h: float
    power_kw: float
    energy_kwh: float
    clipped: bool = False

    def __post_init__(self) -> None:
        if abs(self.energy_kwh - self.power_kw * self.duration_h) > 1e-9:
            raise InputError("session energy must equal power times duration")

    @property
    def end(self) -> datetime:
        return self.start + timedelta(hours=self.duration_h)


def detect_sessions(
    log: OperationLog,
    capacity_kwh: float,
    power_kw: float = DEFAULT_SESSION_POWER_KW,
) -> list[ChargingSession]:
    """Sessions explaining the SoC gains between consecutive operations.

    Each gain is converted to energy on the given pack and charged at the
    nominal session power from the moment the preceding operation ends.
    A session that would not fit in the idle gap is clipped to the gap and
    flagged; its energy is reduced to keep energy = power * duration.
    The stretch after the final operation is anchored on the last log
    sample, so an end-of-log recharge still yields a session.
    """
    if power_kw <= 0 or capacity_kwh <= 0:
        raise InputError("session power and capacity must be positive")
    ops = log.operations()
    sessions: list[ChargingSession] = []
    for i, op in enumerate(ops):
        if i + 1 < len(ops):
            anchor_soc = ops[i + 1].soc_start
            anchor_time = ops[i + 1].start
        else:
            tail = log.samples[-1]
            if tail.state != "idle" or tail.timestamp <= op.end:
                break
            anchor_soc = tail.soc_percent
            anchor_time = tail.timestamp
        gain = anchor_soc - op.soc_end
        if gain <= -SOC_RESOLUTION:
            raise DataInconsistencyError(
                f"vehicle {log.vehicle_id!r}: SoC fell {-gain:.1f} points while idle"
                f" after the operation ending {op.end.isoformat()}"
            )
        if gain < SOC_RESOLUTION:
            continue
        energy = gain / 100.0 * capacity_kwh
        duration = energy / power_kw
        gap_h = (anchor_time - op.end).total_seconds() / 3600.0
        clipped = duration > gap_h + TIME_TOL_H
        if clipped:
            duration = gap_h
            energy = power_kw * duration
        sessions.append(
            ChargingSession(
                vehicle_id=log.vehicle_id,
                start=op.end,
                duration_h=duration,
                power_kw=power_kw,
                energy_kwh=energy,
                clipped=clipped,
            )
        )
    return sessions


def _overlap_h(a_start: datetime, a_end: datetime, b_start: datetime, b_end: datetime) -> float:
    lo = max(a_start, b_start)
    hi = min(a_end, b_end)
    return max((hi - lo).total_seconds() / 3600.0, 0.0)


def profile_from_operations(
    vehicle_id: str,
    operations: list[Operation],
    grid: TimeGrid,
    battery: BatteryParams,
    charger_max_kw: float,
) -> VehicleProfile:
    """Project operations onto a planning grid.

    Each operation's SoC drop is apportioned over the steps it overlaps in
    proportion to overlapped time.  A step touched by any operation counts
    as operating; idle windows are measured over contiguous fully-idle
    steps, and availability additionally requires the window to reach the
    minimum plug-in time.
    """
    n = grid.n_steps
    step_ends = [grid.starts[t] + _td_h(grid.durations_h[t]) for t in range(n)]
    horizon_start = grid.starts[0]
    horizon_end = step_ends[-1]
    delta = np.zeros(n)
    operating = np.zeros(n, dtype=bool)
    for op in operations:
        if op.start < horizon_start or op.end > horizon_end:
            raise InputError(
                f"vehicle {vehicle_id!r}: operation {op.start.isoformat()} to"
                f" {op.end.isoformat()} extends past the planning grid"
            )
        if op.duration_h <= TIME_TOL_H:
            if op.drop > 0.0:
                raise DataInconsistencyError(
                    f"vehicle {vehicle_id!r}: zero-length operation at"
                    f" {op.start.isoformat()} records a SoC drop"
                )
            continue
        for t in range(n):
            ov = _overlap_h(op.start, op.end, grid.starts[t], step_ends[t])
            if ov <= TIME_TOL_H:
                continue
            operating[t] = True
            delta[t] += op.drop * ov / op.duration_h

    idle_window = np.zeros(n)
    t = 0
    while t < n:
        if operating[t]:
            t += 1
            continue
        u = t
        while u < n and not operating[u]:
            u += 1
        window = float(np.sum(grid.durations_h[t:u]))
        idle_window[t:u] = window
        t = u
    available = ~operating & (idle_window >= MIN_IDLE_HOURS - TIME_TOL_H)
    return VehicleProfile(
        vehicle_id=vehicle_id,
        battery=battery,
        charger_max_kw=charger_max_kw,
        delta_soc_op=delta,
        idle_window_h=idle_window,
        available=available,
    )


def build_profile(
    log: OperationLog,
    grid: TimeGrid,
    battery: BatteryParams,
    charger_max_kw: float,
) -> VehicleProfile:
    return profile_from_operations(
        log.vehicle_id, log.operations(), grid, battery, charger_max_kw
    )


def _td_h(hours: float) -> timedelta:
    return timedelta(hours=float(hours))


@dataclass(frozen=True)
class BaselineResult:
    """Cost of the uncontrolled sessions, billed at their realized peak.

    The baseline describes what the logs say happened, so it is not held
    to the grid connection cap; concurrent sessions may exceed it.
    """

    grid: TimeGrid
    power_by_vehicle: dict[str, np.ndarray]
    energy_cost: float
    demand_cost: float
    peak_kw: float

    @property
    def total_cost(self) -> float:
        return self.energy_cost + self.demand_cost


def uncontrolled_baseline(
    sessions: list[ChargingSession],
    span_start: datetime,
    span_end: datetime,
    prices: SpotPriceSeries,
    tariff: TariffModel,
    month_id: str,
) -> BaselineResult:
    """Aggregate the sessions on a grid refined at every session boundary.

    Refinement makes each session's power constant within a step, so the
    realized peak is the true instantaneous concurrency, not an hourly
    average that would understate it.
    """
    events: list[datetime] = []
    for s in sessions:
        if s.start < span_start or s.end > span_end + _td_h(TIME_TOL_H):
            raise InputError(
                f"session for {s.vehicle_id!r} at {s.start.isoformat()}"
                " lies outside the baseline span"
            )
        events.append(s.start)
        events.append(s.end)
    grid = build_time_grid(span_start, span_end, month_id, events=events)
    n = grid.n_steps
    step_ends = [grid.starts[t] + _td_h(grid.durations_h[t]) for t in range(n)]

    power_by_vehicle: dict[str, np.ndarray] = {}
    for s in sessions:
        power = power_by_vehicle.setdefault(s.vehicle_id, np.zeros(n))
        for t in range(n):
            ov = _overlap_h(s.start, s.end, grid.starts[t], step_ends[t])
            if ov <= 0.0:
                continue
            power[t] += s.power_kw * ov / grid.durations_h[t]

    aggregate = np.zeros(n)
    for power in power_by_vehicle.values():
        aggregate += power
    peak = float(np.max(aggregate)) if n else 0.0
    price = prices.for_grid(grid)
    energy = float(sum(np.dot(p, price * grid.durations_h) for p in power_by_vehicle.values()))
    demand = tariff.peak_price_per_kw * peak
    return BaselineResult(
        grid=grid,
        power_by_vehicle=power_by_vehicle,
        energy_cost=energy,
        demand_cost=demand,
        peak_kw=peak,
    )
