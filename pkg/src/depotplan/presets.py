"""Ready-made instances: a three-shuttle depot and sized regression fleets.

Both presets share the same physics: 50 kWh packs kept between 20% and
100%, 11 kW depot chargers, a monthly peak charge of 4 currency units per
kW, and day-shaped spot prices with a cheap night valley and an expensive
evening.  The three-shuttle depot is built through the log-ingestion
pipeline so it exercises session detection end to end; the regression
fleets are synthesized from a single hour-aligned base schedule.
"""

from __future__ import annotations

import calendar
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .ingest import (
    BaselineResult,
    ChargingSession,
    LogSample,
    Operation,
    OperationLog,
    build_profile,
    detect_sessions,
    uncontrolled_baseline,
)
from .model import (
    BatteryParams,
    FleetInstance,
    InputError,
    SpotPriceSeries,
    TariffModel,
    build_time_grid,
    hour_floor,
)
from .synth import SynthConfig, SynthResult, synthesize_fleet

# Hour-of-day spot price shapes, currency per kWh.
REGRESSION_CURVE = (
    0.07, 0.07, 0.06, 0.06, 0.06, 0.07,
    0.07, 0.14, 0.20, 0.23, 0.21, 0.19,
    0.18, 0.18, 0.19, 0.21, 0.26, 0.33,
    0.36, 0.33, 0.28, 0.22, 0.08, 0.07,
)
SHUTTLE_CURVE = (
    0.06, 0.06, 0.06, 0.06, 0.06, 0.06,
    0.06, 0.17, 0.21, 0.19, 0.17, 0.16,
    0.16, 0.18, 0.24, 0.42, 0.48, 0.46,
    0.40, 0.32, 0.24, 0.14, 0.07, 0.06,
)

PEAK_PRICE_PER_KW = 4.0
PACK_KWH = 50.0
CHARGER_KW = 11.0

# Candidate-cap windows by fleet size; every window holds 16 caps at 1 kW.
_WINDOW_ANCHORS = ((3, 0.0), (10, 5.0), (20, 20.0), (30, 35.0), (50, 65.0))
WINDOW_WIDTH_KW = 15.0


def candidate_window(n_vehicles: int) -> tuple[float, float]:
    """Candidate window [lo, lo + 15] kW, interpolated between known sizes."""
    if n_vehicles < 1:
        raise InputError("fleet size must be positive")
    sizes = np.array([s for s, _ in _WINDOW_ANCHORS], dtype=float)
    lows = np.array([lo for _, lo in _WINDOW_ANCHORS], dtype=float)
    lo = float(np.interp(n_vehicles, sizes, lows))
    lo = float(round(lo))
    return lo, lo + WINDOW_WIDTH_KW


def preset_tariff(n_vehicles: int) -> TariffModel:
    lo, hi = candidate_window(n_vehicles)
    return TariffModel(
        peak_price_per_kw=PEAK_PRICE_PER_KW,
        grid_cap_kw=hi,
        candidate_lo_kw=lo,
        candidate_hi_kw=hi,
        candidate_step_kw=1.0,
    )


def preset_battery() -> BatteryParams:
    return BatteryParams(
        capacity_kwh=PACK_KWH,
        soc_min=20.0,
        soc_max=100.0,
        soc_init=100.0,
        soc_target=100.0,
        epsilon=1.0,
    )


def synthetic_price_series(
    span_start: datetime,
    span_end: datetime,
    daily_curve: tuple[float, ...] = REGRESSION_CURVE,
    seed: int = 0,
    noise: float = 0.03,
) -> SpotPriceSeries:
    """Hourly prices repeating a daily shape with seeded multiplicative noise."""
    if len(daily_curve) != 24:
        raise InputError("a daily curve needs 24 hourly values")
    rng = np.random.default_rng(seed)
    prices: dict[datetime, float] = {}
    hour = hour_floor(span_start)
    while hour < span_end:
        wobble = 1.0 + rng.uniform(-noise, noise)
        prices[hour] = daily_curve[hour.hour] * wobble
        hour += timedelta(hours=1)
    return SpotPriceSeries(prices)


# --- three-shuttle depot -------------------------------------------------

# Each shuttle runs two 3-hour trips draining 2 SoC points per hour; the
# drain rate keeps every per-step depletion integral on the hourly grid,
# including the half-hour staggered starts.  All three overnight plug-ins
# overlap shortly after 16:00, stacking to 15 kW.
_SHUTTLE_DROPS = (6.0, 6.0, 6.0)
_SHUTTLE_OFFSETS_H = (0.0, 0.5, 1.0)
_TRIP1 = (7.0, 10.0)
_TRIP2 = (12.0, 15.0)


def three_shuttle_logs(span_start: datetime, n_days: int) -> list[OperationLog]:
    """Synthetic operational logs for the three shuttles.

    Each day has two trips separated by a midday layover away from the
    depot (SoC flat, so no session is inferred there) and an overnight
    recharge that shows up as a gain by the next morning.  The final
    sample pins the end-of-month recharge.
    """
    logs = []
    for i, (drop, offset) in enumerate(zip(_SHUTTLE_DROPS, _SHUTTLE_OFFSETS_H)):
        samples: list[LogSample] = []
        for day in range(n_days):
            base = span_start + timedelta(hours=24.0 * day + offset)

            def at(hours: float, soc: float, state: str) -> LogSample:
                return LogSample(base + timedelta(hours=hours), soc, state)

            samples.append(at(_TRIP1[0], 100.0, "operating"))
            samples.append(at(_TRIP1[1], 100.0 - drop, "operating"))
            samples.append(at(_TRIP1[1] + 0.5, 100.0 - drop, "idle"))
            samples.append(at(_TRIP2[0], 100.0 - drop, "operating"))
            samples.append(at(_TRIP2[1], 100.0 - 2 * drop, "operating"))
            # Observed an hour into the overnight plug-in: 5 kW on a 50 kWh
            # pack restores 10 points per hour until full.
            seen = min(100.0, 100.0 - 2 * drop + 10.0)
            samples.append(at(_TRIP2[1] + 1.0, seen, "idle"))
        samples.append(
            LogSample(span_start + timedelta(days=n_days), 100.0, "idle")
        )
        logs.append(OperationLog(vehicle_id=f"shuttle{i}", samples=tuple(samples)))
    return logs


@dataclass(frozen=True)
class ShuttlePreset:
    instance: FleetInstance
    logs: tuple[OperationLog, ...]
    sessions: tuple[ChargingSession, ...]
    baseline: BaselineResult


def three_shuttle_preset(year: int, month: int) -> ShuttlePreset:
    """The three-shuttle depot for one calendar month."""
    n_days = calendar.monthrange(year, month)[1]
    span_start = datetime(year, month, 1)
    span_end = span_start + timedelta(days=n_days)
    month_id = f"{year:04d}-{month:02d}"

    logs = three_shuttle_logs(span_start, n_days)
    battery = preset_battery()
    grid = build_time_grid(span_start, span_end, month_id)
    profiles = tuple(
        build_profile(log, grid, battery, CHARGER_KW) for log in logs
    )
    sessions: list[ChargingSession] = []
    for log in logs:
        sessions.extend(detect_sessions(log, capacity_kwh=PACK_KWH))

    prices = synthetic_price_series(
        span_start, span_end, SHUTTLE_CURVE, seed=year * 100 + month
    )
    tariff = preset_tariff(len(logs))
    instance = FleetInstance(grid=grid, prices=prices, tariff=tariff, profiles=profiles)
    baseline = uncontrolled_baseline(
        sessions, span_start, span_end, prices, tariff, month_id
    )
    return ShuttlePreset(
        instance=instance,
        logs=tuple(logs),
        sessions=tuple(sessions),
        baseline=baseline,
    )


# --- sized regression fleets ---------------------------------------------

# Base vehicle: two trips a day.  Drops are whole points per hour (5/h on
# the long trip, 7/h on the short one) so the base schedule sits on the
# solver's level grid even before quantization.
_REGRESSION_TRIPS = ((6.0, 9.0, 15.0), (10.0, 12.0, 14.0))


def regression_base_trips(span_start: datetime, n_days: int) -> list[Operation]:
    trips = []
    for day in range(n_days):
        for start_h, end_h, drop in _REGRESSION_TRIPS:
            soc_start = 100.0
            trips.append(
                Operation(
                    start=span_start + timedelta(hours=24.0 * day + start_h),
                    end=span_start + timedelta(hours=24.0 * day + end_h),
                    soc_start=soc_start,
                    soc_end=soc_start - drop,
                )
            )
    return trips


def regression_instance(
    n_vehicles: int,
    seed: int,
    n_days: int = 14,
    span_start: datetime = datetime(2022, 6, 1),
) -> tuple[FleetInstance, SynthResult]:
    """A synthesized fleet on a day-shaped price series, sized to n_vehicles.

    Fourteen days keep the exact benchmark quick while preserving the
    month structure (one demand charge over the whole span).  The span
    runs eight hours past the last operating day so the final night is a
    complete recovery window; ending at midnight would pit the terminal
    SoC target against the last returns in a way a rolling horizon never
    does.
    """
    span_end = span_start + timedelta(days=n_days, hours=8)
    month_id = f"{span_start:%Y-%m}"
    base = regression_base_trips(span_start, n_days)
    cfg = SynthConfig(
        n_vehicles=n_vehicles,
        shift_hours_max=10,
        scale_lo=0.5,
        scale_hi=1.2,
        seed=seed,
        id_prefix="veh",
        integral_depletion=True,
    )
    synth = synthesize_fleet(
        base, span_start, span_end, month_id, preset_battery(), CHARGER_KW, cfg
    )
    prices = synthetic_price_series(
        span_start, span_end, REGRESSION_CURVE, seed=seed + 1000
    )
    instance = FleetInstance(
        grid=synth.grid,
        prices=prices,
        tariff=preset_tariff(n_vehicles),
        profiles=synth.profiles,
    )
    return instance, synth
