"""Synthetic fleets derived from one base vehicle's trip schedule.

Vehicle 1 keeps the base schedule verbatim.  Every further vehicle gets an
integer-hour shift of all its trips plus an independent energy scale per
trip; trips pushed past the month end wrap around to the month start, so
total operating time is preserved.  A full-recharge reference (any idle
gap long enough to plug in restores the battery to its ceiling) is used
to clamp scaled trips that would otherwise run the pack below its floor;
the base schedule itself must pass that reference unclamped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Sequence

import numpy as np

from .ingest import Operation, profile_from_operations
from .model import (
    MIN_IDLE_HOURS,
    TIME_TOL_H,
    BatteryParams,
    InputError,
    TimeGrid,
    VehicleProfile,
    build_time_grid,
)


@dataclass(frozen=True)
class SynthConfig:
    n_vehicles: int
    shift_hours_max: int = 10
    scale_lo: float = 0.5
    scale_hi: float = 1.2
    seed: int = 0
    id_prefix: str = "v"
    # Round every scaled drop so a trip sheds a whole number of points per
    # hour.  On an hourly grid with hour-aligned trips this keeps simulated
    # state of charge on the solver's integer level grid; without it, a
    # fractional residue can make the terminal band unreachable for the
    # discretized solver even though the continuous problem is feasible.
    integral_depletion: bool = False

    def __post_init__(self) -> None:
        if self.n_vehicles < 1:
            raise InputError("a fleet needs at least one vehicle")
        if self.shift_hours_max < 0:
            raise InputError("shift range cannot be negative")
        if not 0.0 < self.scale_lo <= self.scale_hi:
            raise InputError("energy scales must satisfy 0 < lo <= hi")


@dataclass(frozen=True)
class ClampEvent:
    vehicle_id: str
    trip_start: datetime
    requested_drop: float
    applied_drop: float


@dataclass(frozen=True)
class SynthResult:
    grid: TimeGrid
    profiles: tuple[VehicleProfile, ...]
    trips_by_vehicle: dict[str, tuple[Operation, ...]]
    clamp_events: tuple[ClampEvent, ...]
    shifts_h: tuple[int, ...]
    scales: dict[str, tuple[float, ...]] = field(default_factory=dict)


def wrap_trip(trip: Operation, span_start: datetime, span_end: datetime) -> list[Operation]:
    """Fold a trip into the span, splitting it at the boundary if needed.

    The SoC drop is divided between the pieces in proportion to duration.
    """
    span = span_end - span_start
    if trip.end - trip.start > span:
        raise InputError("trip is longer than the whole span")
    start = trip.start
    while start >= span_end:
        start -= span
    while start < span_start:
        start += span
    end = start + (trip.end - trip.start)
    if end <= span_end:
        return [
            Operation(start=start, end=end, soc_start=trip.soc_start, soc_end=trip.soc_end)
        ]
    total_h = (end - start).total_seconds() / 3600.0
    head_h = (span_end - start).total_seconds() / 3600.0
    drop = trip.drop
    head_drop = drop * head_h / total_h
    head = Operation(
        start=start, end=span_end, soc_start=trip.soc_start, soc_end=trip.soc_start - head_drop
    )
    tail = Operation(
        start=span_start,
        end=span_start + (end - span_end),
        soc_start=trip.soc_start,
        soc_end=trip.soc_start - (drop - head_drop),
    )
    return [head, tail]


def _scaled(trip: Operation, scale: float) -> Operation:
    return Operation(
        start=trip.start,
        end=trip.end,
        soc_start=trip.soc_start,
        soc_end=trip.soc_start - trip.drop * scale,
    )


def _with_drop(trip: Operation, drop: float) -> Operation:
    return Operation(
        start=trip.start, end=trip.end, soc_start=trip.soc_start, soc_end=trip.soc_start - drop
    )


def _quantized(trip: Operation) -> Operation:
    """Round the drop to the nearest positive multiple of the duration in hours."""
    hours = trip.duration_h
    if hours <= TIME_TOL_H:
        return trip
    per_hour = max(1, round(trip.drop / hours))
    return _with_drop(trip, per_hour * hours)


def _assert_disjoint(trips: Sequence[Operation], vehicle_id: str) -> None:
    for a, b in zip(trips, trips[1:]):
        if b.start < a.end - timedelta(hours=TIME_TOL_H):
            raise InputError(
                f"vehicle {vehicle_id!r}: trips overlap around {b.start.isoformat()}"
            )


def reference_clamp(
    trips: Sequence[Operation],
    battery: BatteryParams,
    span_start: datetime,
    vehicle_id: str,
    clamp: bool = True,
) -> tuple[list[Operation], list[ClampEvent]]:
    """Clamp trip drops so a full-recharge reference never breaches the floor.

    The reference assumes any idle gap of at least the minimum plug-in time
    recharges the pack to its ceiling, which upper-bounds what real
    charging can restore.  With ``clamp`` off, a breach raises instead;
    that is the base-schedule feasibility check.
    """
    soc = battery.soc_init
    prev_end = span_start
    out: list[Operation] = []
    events: list[ClampEvent] = []
    for trip in trips:
        gap_h = (trip.start - prev_end).total_seconds() / 3600.0
        if gap_h >= MIN_IDLE_HOURS - TIME_TOL_H:
            soc = battery.soc_max
        applied = trip.drop
        if soc - applied < battery.soc_min - 1e-9:
            if not clamp:
                raise InputError(
                    f"vehicle {vehicle_id!r}: schedule runs the battery below its"
                    f" floor on the trip starting {trip.start.isoformat()}"
                )
            applied = max(soc - battery.soc_min, 0.0)
            events.append(
                ClampEvent(
                    vehicle_id=vehicle_id,
                    trip_start=trip.start,
                    requested_drop=trip.drop,
                    applied_drop=applied,
                )
            )
        soc -= applied
        out.append(_with_drop(trip, applied))
        prev_end = trip.end
    return out, events


def synthesize_fleet(
    base_trips: Sequence[Operation],
    span_start: datetime,
    span_end: datetime,
    month_id: str,
    battery: BatteryParams,
    charger_max_kw: float,
    cfg: SynthConfig,
    grid_events: Sequence[datetime] = (),
) -> SynthResult:
    """Build a fleet of shifted, rescaled copies of the base schedule.

    The planning grid is hourly unless ``grid_events`` adds boundaries;
    trips that are not hour-aligned are apportioned onto the grid by
    overlap, which is exact for energy but quantizes availability.
    """
    base = sorted(base_trips, key=lambda t: t.start)
    if not base:
        raise InputError("the base schedule has no trips")
    _assert_disjoint(base, "base")
    # The base must be workable before any copies are derived from it.
    reference_clamp(base, battery, span_start, vehicle_id="base", clamp=False)

    rng = np.random.default_rng(cfg.seed)
    width = len(str(max(cfg.n_vehicles - 1, 1)))
    grid = build_time_grid(span_start, span_end, month_id, events=grid_events)

    profiles: list[VehicleProfile] = []
    trips_by_vehicle: dict[str, tuple[Operation, ...]] = {}
    clamp_events: list[ClampEvent] = []
    shifts: list[int] = []
    scales: dict[str, tuple[float, ...]] = {}
    for i in range(cfg.n_vehicles):
        vid = f"{cfg.id_prefix}{i:0{width}d}"
        if i == 0:
            shift = 0
            trip_scales = tuple(1.0 for _ in base)
        else:
            shift = int(rng.integers(0, cfg.shift_hours_max + 1))
            trip_scales = tuple(float(rng.uniform(cfg.scale_lo, cfg.scale_hi)) for _ in base)
        shifts.append(shift)
        scales[vid] = trip_scales

        moved: list[Operation] = []
        for trip, scale in zip(base, trip_scales):
            shifted = Operation(
                start=trip.start + timedelta(hours=shift),
                end=trip.end + timedelta(hours=shift),
                soc_start=trip.soc_start,
                soc_end=trip.soc_end,
            )
            scaled = _scaled(shifted, scale)
            if cfg.integral_depletion:
                scaled = _quantized(scaled)
            moved.extend(wrap_trip(scaled, span_start, span_end))
        moved.sort(key=lambda t: t.start)
        _assert_disjoint(moved, vid)
        clamped, events = reference_clamp(moved, battery, span_start, vid, clamp=True)
        clamp_events.extend(events)
        trips_by_vehicle[vid] = tuple(clamped)
        profiles.append(
            profile_from_operations(vid, clamped, grid, battery, charger_max_kw)
        )
    return SynthResult(
        grid=grid,
        profiles=tuple(profiles),
        trips_by_vehicle=trips_by_vehicle,
        clamp_events=tuple(clamp_events),
        shifts_h=tuple(shifts),
        scales=scales,
    )
