"""Shared builders for small test instances."""

from __future__ import annotations

from datetime import datetime, timedelta

import numpy as np
import pytest

from depotplan.model import (
    BatteryParams,
    FleetInstance,
    SpotPriceSeries,
    TariffModel,
    TimeGrid,
    VehicleProfile,
    build_time_grid,
    hour_floor,
)

T0 = datetime(2022, 6, 1)


def hourly_grid(n_hours: int, start: datetime = T0, month_id: str = "2022-06") -> TimeGrid:
    return build_time_grid(start, start + timedelta(hours=n_hours), month_id)


def grid_from_durations(durations, start: datetime = T0, month_id: str = "2022-06") -> TimeGrid:
    starts = []
    cursor = start
    for d in durations:
        starts.append(cursor)
        cursor = cursor + timedelta(hours=float(d))
    return TimeGrid(starts=tuple(starts), durations_h=np.array(durations, dtype=float), month_id=month_id)


def prices_for(grid: TimeGrid, values) -> SpotPriceSeries:
    """One price per distinct hour touched by the grid, in chronological order.

    A scalar is broadcast to every hour.
    """
    hours = sorted({hour_floor(s) for s in grid.starts})
    if np.isscalar(values):
        values = [float(values)] * len(hours)
    if len(values) != len(hours):
        raise ValueError(f"need {len(hours)} prices, got {len(values)}")
    return SpotPriceSeries({h: float(v) for h, v in zip(hours, values)})


def make_battery(
    capacity_kwh: float = 100.0,
    soc_min: float = 0.0,
    soc_max: float = 100.0,
    soc_init: float = 50.0,
    soc_target: float = 50.0,
    epsilon: float = 1.0,
) -> BatteryParams:
    return BatteryParams(
        capacity_kwh=capacity_kwh,
        soc_min=soc_min,
        soc_max=soc_max,
        soc_init=soc_init,
        soc_target=soc_target,
        epsilon=epsilon,
    )


def idle_profile(
    vehicle_id: str,
    grid: TimeGrid,
    battery: BatteryParams | None = None,
    charger_max_kw: float = 11.0,
) -> VehicleProfile:
    """A vehicle that never operates: every step is available for charging."""
    n = grid.n_steps
    window = float(np.sum(grid.durations_h))
    return VehicleProfile(
        vehicle_id=vehicle_id,
        battery=battery or make_battery(),
        charger_max_kw=charger_max_kw,
        delta_soc_op=np.zeros(n),
        idle_window_h=np.full(n, window),
        available=np.ones(n, dtype=bool),
    )


def profile_with_depletion(
    vehicle_id: str,
    grid: TimeGrid,
    delta_soc_op,
    battery: BatteryParams | None = None,
    charger_max_kw: float = 11.0,
) -> VehicleProfile:
    """Steps with depletion are operating; idle windows are measured around them."""
    dep = np.asarray(delta_soc_op, dtype=float)
    n = grid.n_steps
    operating = dep > 0.0
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
    available = ~operating & (idle_window >= 0.5 - 1e-9)
    return VehicleProfile(
        vehicle_id=vehicle_id,
        battery=battery or make_battery(),
        charger_max_kw=charger_max_kw,
        delta_soc_op=dep,
        idle_window_h=idle_window,
        available=available,
    )


def make_tariff(
    peak_price_per_kw: float = 4.0,
    grid_cap_kw: float = 15.0,
    candidate_lo_kw: float = 0.0,
    candidate_hi_kw: float = 15.0,
    candidate_step_kw: float = 1.0,
) -> TariffModel:
    return TariffModel(
        peak_price_per_kw=peak_price_per_kw,
        grid_cap_kw=grid_cap_kw,
        candidate_lo_kw=candidate_lo_kw,
        candidate_hi_kw=candidate_hi_kw,
        candidate_step_kw=candidate_step_kw,
    )


def make_instance(grid, prices, profiles, tariff=None) -> FleetInstance:
    return FleetInstance(
        grid=grid,
        prices=prices,
        tariff=tariff or make_tariff(),
        profiles=tuple(profiles),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20220601)
